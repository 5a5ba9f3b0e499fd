//! Breakthrough on a square board. Each player starts with two full rows of
//! pawns; player 1 moves north. Pawns step straight or diagonally forward
//! onto empty cells and capture diagonally forward. Reaching the far row or
//! capturing every enemy pawn wins; a player without moves loses.

use super::{finish_move, Game, GameMeta};
use crate::geometry::{build_square_grid, PlayOn};
use crate::state::{Action, GameState, Status};

pub struct Breakthrough {
    meta: GameMeta,
    size: usize,
}

impl Breakthrough {
    pub fn new(size: usize) -> Self {
        assert!(size >= 4, "board too small for two pawn rows each");
        let mut graph = build_square_grid(size, size, PlayOn::Cells).expect("positive size");
        graph.augment_offboard();
        // Region 0 is player 1's goal row, region 1 player 2's.
        graph
            .add_region(((size - 1) * size..size * size).collect())
            .expect("valid region");
        graph.add_region((0..size).collect()).expect("valid region");
        Breakthrough {
            meta: GameMeta {
                name: "breakthrough".to_string(),
                players: 2,
                piece_owner: vec![1, 2],
                movement: true,
                graph,
            },
            size,
        }
    }

    fn forward(player: u8) -> i32 {
        if player == 1 {
            1
        } else {
            -1
        }
    }

    /// Geometric targets of a pawn: straight first, then left/right diagonal.
    fn targets(&self, site: usize, player: u8) -> impl Iterator<Item = (usize, bool)> {
        let n = self.size as i32;
        let (c, r) = ((site % self.size) as i32, (site / self.size) as i32);
        let r2 = r + Self::forward(player);
        [(0, false), (-1, true), (1, true)]
            .into_iter()
            .filter_map(move |(dc, diagonal)| {
                let c2 = c + dc;
                ((0..n).contains(&c2) && (0..n).contains(&r2)).then(|| ((r2 * n + c2) as usize, diagonal))
            })
    }

    fn legal_moves_of(&self, state: &GameState, player: u8, out: &mut Vec<Action>) {
        for s in 0..self.meta.num_sites() {
            if state.who(s) != player {
                continue;
            }
            for (t, diagonal) in self.targets(s, player) {
                let occupant = state.who(t);
                if occupant == 0 || (diagonal && occupant != player) {
                    out.push(Action::step(s, t));
                }
            }
        }
    }
}

impl Game for Breakthrough {
    fn meta(&self) -> &GameMeta {
        &self.meta
    }

    fn initial_state(&self) -> GameState {
        let mut s = self.meta.new_state();
        let n = self.size;
        for c in 0..n {
            for r in 0..2 {
                s.set_site(r * n + c, 1, 1).expect("valid piece");
                s.set_site((n - 1 - r) * n + c, 2, 2).expect("valid piece");
            }
        }
        s
    }

    fn legal_actions_into(&self, state: &GameState, out: &mut Vec<Action>) {
        self.legal_moves_of(state, state.mover, out);
    }

    fn apply(&self, state: &mut GameState, action: &Action) {
        let (from, to) = (action.from as usize, action.to as usize);
        let p = state.mover;
        debug_assert_eq!(state.who(from), p);
        state.set_site(from, 0, 0).expect("valid piece");
        state.set_site(to, p, p).expect("valid piece");
        finish_move(state, action, 2);
        let goal_row = if p == 1 { self.size - 1 } else { 0 };
        let opponent = 3 - p;
        if to / self.size == goal_row || (0..self.meta.num_sites()).all(|s| state.who(s) != opponent) {
            state.status = Status::Won(p);
            return;
        }
        let mut replies = Vec::new();
        self.legal_moves_of(state, opponent, &mut replies);
        if replies.is_empty() {
            state.status = Status::Won(p);
        }
    }

    fn action_domain(&self, player: u8) -> Vec<(i32, i32)> {
        (0..self.meta.num_sites())
            .flat_map(|s| self.targets(s, player).map(move |(t, _)| (s as i32, t as i32)))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn initial_position() {
        let b = Breakthrough::new(6);
        let s = b.initial_state();
        let occupied = (0..36).filter(|&i| !s.is_empty(i)).count();
        assert_eq!(occupied, 24);
        // front-row pawns have 3 moves each, edge pawns 2: 4*3 + 2*2
        assert_eq!(b.legal_actions(&s).len(), 16);
    }

    #[test]
    fn blocked_pawn_captures_diagonally() {
        let b = Breakthrough::new(6);
        let mut s = b.meta().new_state();
        // player 1 pawn at (2,2), enemies at (1,3), (2,3), (3,3)
        s.set_site(2 * 6 + 2, 1, 1).unwrap();
        for c in 1..=3 {
            s.set_site(3 * 6 + c, 2, 2).unwrap();
        }
        let moves = b.legal_actions(&s);
        assert_eq!(moves.len(), 2);
        assert!(moves.iter().all(|m| m.from == 14 && (m.to == 19 || m.to == 21)));
    }

    #[test]
    fn capture_and_goal() {
        let b = Breakthrough::new(6);
        let mut s = b.meta().new_state();
        s.set_site(4 * 6 + 1, 1, 1).unwrap();
        s.set_site(5 * 6 + 2, 2, 2).unwrap();
        s.set_site(0, 2, 2).unwrap();
        b.apply(&mut s, &Action::step(25, 32));
        assert!(s.is_empty(25));
        assert_eq!(s.who(32), 1);
        assert_eq!(s.status, Status::Won(1));
        assert_eq!((s.last_from, s.last_to), (25, 32));
    }
}
