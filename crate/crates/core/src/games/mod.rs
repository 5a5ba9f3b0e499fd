//! Game interface and the built-in games.

use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::geometry::SiteGraph;
use crate::state::{Action, GameState, Status};

mod breakthrough;
mod hex;
mod lines;

pub use breakthrough::Breakthrough;
pub use hex::Hex;
pub use lines::LineGame;

pub const GAME_NAMES: [&str; 4] = ["tictactoe", "gomoku", "hex", "breakthrough"];

/// Static description of a game that the feature machinery needs.
#[derive(Clone, Debug)]
pub struct GameMeta {
    pub name: String,
    pub players: u8,
    /// Owner of piece type `i + 1`.
    pub piece_owner: Vec<u8>,
    /// Whether actions ever carry a distinct `from` site.
    pub movement: bool,
    pub graph: SiteGraph,
}

impl GameMeta {
    pub fn num_sites(&self) -> usize {
        self.graph.num_sites()
    }

    pub fn num_piece_types(&self) -> usize {
        self.piece_owner.len()
    }

    pub fn pieces_of(&self, player: u8) -> impl Iterator<Item = u8> + '_ {
        self.piece_owner
            .iter()
            .enumerate()
            .filter(move |(_, &o)| o == player)
            .map(|(i, _)| i as u8 + 1)
    }

    /// The only piece type owned by `player`, if there is exactly one.
    pub fn sole_piece(&self, player: u8) -> Option<u8> {
        let mut it = self.pieces_of(player);
        match (it.next(), it.next()) {
            (Some(p), None) => Some(p),
            _ => None,
        }
    }

    /// Two players owning exactly one piece type each.
    pub fn one_type_per_player(&self) -> bool {
        self.players == 2 && self.sole_piece(1).is_some() && self.sole_piece(2).is_some()
    }

    pub fn has_shared_pieces(&self) -> bool {
        self.piece_owner.iter().any(|&o| o == self.players + 1)
    }

    pub fn new_state(&self) -> GameState {
        GameState::new(self.num_sites(), self.players, self.num_piece_types() as u8)
    }
}

pub trait Game: Send + Sync {
    fn meta(&self) -> &GameMeta;

    fn initial_state(&self) -> GameState;

    /// Appends the legal actions of a non-terminal state to `out`.
    fn legal_actions_into(&self, state: &GameState, out: &mut Vec<Action>);

    /// Applies a legal action: updates the board, the last action record,
    /// the mover and the terminal status.
    fn apply(&self, state: &mut GameState, action: &Action);

    /// Every `(from, to)` pair that `player` could ever play.
    fn action_domain(&self, player: u8) -> Vec<(i32, i32)>;

    fn legal_actions(&self, state: &GameState) -> Vec<Action> {
        let mut out = Vec::new();
        self.legal_actions_into(state, &mut out);
        out
    }

    fn name(&self) -> &str {
        &self.meta().name
    }

    /// Per-player utilities of a terminal state, indexed by `player - 1`.
    fn utilities(&self, state: &GameState) -> Vec<f64> {
        let p = self.meta().players as usize;
        match state.status {
            Status::Won(w) => (1..=p).map(|i| if i == w as usize { 1.0 } else { -1.0 }).collect(),
            _ => vec![0.0; p],
        }
    }
}

pub(crate) fn finish_move(state: &mut GameState, action: &Action, players: u8) {
    state.last_from = action.from;
    state.last_to = action.to;
    state.mover = state.mover % players + 1;
    state.ply += 1;
}

pub fn by_name(name: &str) -> Result<Arc<dyn Game>> {
    Ok(match name {
        "tictactoe" => Arc::new(LineGame::tictactoe()),
        "gomoku" => Arc::new(LineGame::gomoku()),
        "hex" | "hex-7" => Arc::new(Hex::new(7)),
        "breakthrough" | "breakthrough-6" => Arc::new(Breakthrough::new(6)),
        _ => return Err(Error::UnknownGame(name.to_string())),
    })
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub steps: Vec<(GameState, Action)>,
    pub utilities: Vec<f64>,
    pub final_state: GameState,
}

/// Plays from `state` to the end, choosing with `select` (which gets the
/// state and its legal actions and returns an index).
pub fn playout<F>(game: &dyn Game, mut state: GameState, mut select: F, record: bool) -> Trajectory
where
    F: FnMut(&GameState, &[Action]) -> usize,
{
    let mut steps = Vec::new();
    let mut actions = Vec::new();
    while !state.is_terminal() {
        actions.clear();
        game.legal_actions_into(&state, &mut actions);
        let a = actions[select(&state, &actions)];
        if record {
            steps.push((state.clone(), a));
        }
        game.apply(&mut state, &a);
        debug_assert!(state.is_consistent(game.meta().num_sites()));
    }
    Trajectory {
        steps,
        utilities: game.utilities(&state),
        final_state: state,
    }
}

pub fn uniform_selector<R: Rng>(rng: &mut R) -> impl FnMut(&GameState, &[Action]) -> usize + '_ {
    move |_, actions| rng.gen_range(0..actions.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn unknown_game() {
        assert!(matches!(by_name("chess"), Err(Error::UnknownGame(_))));
    }

    #[test]
    fn seeded_playouts_are_consistent_and_terminate() {
        for name in GAME_NAMES {
            let g = by_name(name).unwrap();
            let n = g.meta().num_sites();
            let runs = if name == "gomoku" { 200 } else { 1000 };
            for seed in 0..runs {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut state = g.initial_state();
                let mut actions = Vec::new();
                while !state.is_terminal() {
                    actions.clear();
                    g.legal_actions_into(&state, &mut actions);
                    assert!(!actions.is_empty());
                    let a = actions[rng.gen_range(0..actions.len())];
                    g.apply(&mut state, &a);
                    assert!(state.is_consistent(n));
                    assert_eq!(state.last_to, a.to);
                }
                let u = g.utilities(&state);
                assert!(u.iter().all(|x| (-1.0..=1.0).contains(x)));
                assert_eq!(u[0], -u[1]);
                if name == "hex" {
                    assert!(matches!(state.status, Status::Won(_)));
                }
                if name == "tictactoe" {
                    assert!(state.ply <= 9);
                }
            }
        }
    }

    #[test]
    fn playouts_are_deterministic() {
        for name in GAME_NAMES {
            let g = by_name(name).unwrap();
            let run = |seed| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                playout(g.as_ref(), g.initial_state(), uniform_selector(&mut rng), true)
            };
            let a = run(7);
            let b = run(7);
            assert_eq!(a.steps.len(), b.steps.len());
            assert_eq!(a.final_state, b.final_state);
        }
    }

    #[test]
    fn action_domains_cover_legal_moves() {
        for name in GAME_NAMES {
            let g = by_name(name).unwrap();
            let domains: Vec<Vec<(i32, i32)>> = (1..=2).map(|p| g.action_domain(p)).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(3);
            let t = playout(g.as_ref(), g.initial_state(), uniform_selector(&mut rng), true);
            for (s, a) in &t.steps {
                assert!(domains[s.mover as usize - 1].contains(&(a.from, a.to)), "{name}");
            }
        }
    }
}
