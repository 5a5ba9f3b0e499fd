//! Bit-array game states.
//!
//! A state stores three arrays over sites: `empty` (one bit), `who` (the
//! owning player, `P+1` for shared pieces) and `what` (the piece type).
//! `who` and `what` are packed into power-of-two-wide chunks so that no
//! chunk straddles a 64-bit word.

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ChunkParams {
    /// Bits needed to store the largest value.
    pub bits: u32,
    /// Chunk width: the smallest power of two that is at least `bits`.
    pub chunk: u32,
}

fn bit_length(v: u32) -> u32 {
    32 - v.leading_zeros()
}

fn params(bits: u32) -> ChunkParams {
    ChunkParams {
        bits,
        chunk: bits.next_power_of_two(),
    }
}

/// Chunk sizing for the `who` array of a `players`-player game.
pub fn chunk_params_who(players: u32) -> ChunkParams {
    params(bit_length(players + 1))
}

/// Chunk sizing for the `what` array of a game with `pieces` piece types.
pub fn chunk_params_what(pieces: u32) -> ChunkParams {
    params(bit_length(pieces))
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ChunkedBits {
    chunk: u32,
    words: Vec<u64>,
}

impl ChunkedBits {
    pub fn new(len: usize, chunk: u32) -> Self {
        assert!(chunk.is_power_of_two() && chunk <= 64);
        let per_word = 64 / chunk as usize;
        ChunkedBits {
            chunk,
            words: vec![0; len.div_ceil(per_word)],
        }
    }

    pub fn chunk_bits(&self) -> u32 {
        self.chunk
    }

    #[inline]
    fn locate(&self, i: usize) -> (usize, u32, u64) {
        // chunks are powers of two, so shifts replace division
        let log_chunk = self.chunk.trailing_zeros();
        let log_per_word = 6 - log_chunk;
        let shift = ((i & ((1 << log_per_word) - 1)) as u32) << log_chunk;
        let mask = u64::MAX >> (64 - self.chunk);
        (i >> log_per_word, shift, mask)
    }

    #[inline]
    pub fn get(&self, i: usize) -> u64 {
        let (w, shift, mask) = self.locate(i);
        (self.words[w] >> shift) & mask
    }

    #[inline]
    pub fn set(&mut self, i: usize, v: u64) {
        let (w, shift, mask) = self.locate(i);
        debug_assert!(v <= mask);
        self.words[w] = (self.words[w] & !(mask << shift)) | ((v & mask) << shift);
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BitArray {
    Empty,
    Who,
    What,
}

/// Condition `array[site] == value`, or its negation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Proposition {
    pub site: u32,
    pub array: BitArray,
    pub value: u8,
    pub negated: bool,
}

impl Proposition {
    pub fn new(site: usize, array: BitArray, value: u8, negated: bool) -> Self {
        Proposition {
            site: site as u32,
            array,
            value,
            negated,
        }
    }

    pub fn negate(self) -> Self {
        Proposition {
            negated: !self.negated,
            ..self
        }
    }

    /// The proposition with `negated` cleared.
    pub fn positive(self) -> Self {
        Proposition { negated: false, ..self }
    }
}

impl std::fmt::Display for Proposition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let neg = if self.negated { "!" } else { "" };
        let arr = match self.array {
            BitArray::Empty => "empty",
            BitArray::Who => "who",
            BitArray::What => "what",
        };
        write!(f, "{neg}{arr}[{}]={}", self.site, self.value)
    }
}

/// A move. Placements have `from == -1`; passes have both ends at -1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Action {
    pub from: i32,
    pub to: i32,
    /// Game-specific discriminator for actions sharing the same ends.
    pub tag: u32,
}

impl Action {
    pub const PASS: Action = Action {
        from: -1,
        to: -1,
        tag: 0,
    };

    pub fn place(to: usize) -> Self {
        Action {
            from: -1,
            to: to as i32,
            tag: 0,
        }
    }

    pub fn step(from: usize, to: usize) -> Self {
        Action {
            from: from as i32,
            to: to as i32,
            tag: 0,
        }
    }

    pub fn is_pass(&self) -> bool {
        self.from < 0 && self.to < 0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Status {
    Ongoing,
    Won(u8),
    Draw,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GameState {
    players: u8,
    pieces: u8,
    empty: ChunkedBits,
    who: ChunkedBits,
    what: ChunkedBits,
    pub mover: u8,
    pub last_from: i32,
    pub last_to: i32,
    pub ply: u32,
    pub status: Status,
}

impl GameState {
    /// An empty board with player 1 to move.
    pub fn new(sites: usize, players: u8, pieces: u8) -> Self {
        assert!(players >= 1 && pieces >= 1);
        let mut empty = ChunkedBits::new(sites, 1);
        for i in 0..sites {
            empty.set(i, 1);
        }
        GameState {
            players,
            pieces,
            empty,
            who: ChunkedBits::new(sites, chunk_params_who(players as u32).chunk),
            what: ChunkedBits::new(sites, chunk_params_what(pieces as u32).chunk),
            mover: 1,
            last_from: -1,
            last_to: -1,
            ply: 0,
            status: Status::Ongoing,
        }
    }

    pub fn players(&self) -> u8 {
        self.players
    }

    pub fn set_site(&mut self, site: usize, owner: u8, piece: u8) -> Result<()> {
        if (owner == 0) != (piece == 0) {
            return Err(Error::InvalidArgument(format!(
                "owner {owner} and piece {piece} disagree on emptiness"
            )));
        }
        if owner > self.players + 1 || piece > self.pieces {
            return Err(Error::InvalidArgument(format!(
                "owner {owner} or piece {piece} out of range"
            )));
        }
        self.empty.set(site, (owner == 0) as u64);
        self.who.set(site, owner as u64);
        self.what.set(site, piece as u64);
        Ok(())
    }

    #[inline]
    pub fn is_empty(&self, site: usize) -> bool {
        self.empty.get(site) == 1
    }

    #[inline]
    pub fn who(&self, site: usize) -> u8 {
        self.who.get(site) as u8
    }

    #[inline]
    pub fn what(&self, site: usize) -> u8 {
        self.what.get(site) as u8
    }

    #[inline]
    pub fn eval(&self, p: &Proposition) -> bool {
        let s = p.site as usize;
        let v = match p.array {
            BitArray::Empty => self.empty.get(s),
            BitArray::Who => self.who.get(s),
            BitArray::What => self.what.get(s),
        };
        (v == p.value as u64) != p.negated
    }

    /// Checks the empty/who/what agreement on every site.
    pub fn is_consistent(&self, sites: usize) -> bool {
        (0..sites).all(|s| {
            let e = self.is_empty(s);
            e == (self.who(s) == 0)
                && e == (self.what(s) == 0)
                && self.who(s) <= self.players + 1
                && self.what(s) <= self.pieces
        })
    }

    pub fn is_terminal(&self) -> bool {
        self.status != Status::Ongoing
    }
}
