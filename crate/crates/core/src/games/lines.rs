//! Placement games won by a line of `k` stones: tic-tac-toe and free-style
//! gomoku.

use super::{finish_move, Game, GameMeta};
use crate::geometry::{build_square_grid, PlayOn};
use crate::state::{Action, GameState, Status};

pub struct LineGame {
    meta: GameMeta,
    width: usize,
    height: usize,
    k: usize,
}

impl LineGame {
    fn new(name: &str, width: usize, height: usize, play_on: PlayOn, k: usize) -> Self {
        let mut graph = build_square_grid(width, height, play_on).expect("positive size");
        graph.augment_offboard();
        let (width, height) = match play_on {
            PlayOn::Cells => (width, height),
            PlayOn::Vertices => (width + 1, height + 1),
        };
        LineGame {
            meta: GameMeta {
                name: name.to_string(),
                players: 2,
                piece_owner: vec![1, 2],
                movement: false,
                graph,
            },
            width,
            height,
            k,
        }
    }

    pub fn tictactoe() -> Self {
        Self::new("tictactoe", 3, 3, PlayOn::Cells, 3)
    }

    /// 9×9 intersections, five in a row (overlines count).
    pub fn gomoku() -> Self {
        Self::new("gomoku", 8, 8, PlayOn::Vertices, 5)
    }

    fn completes_line(&self, state: &GameState, site: usize, who: u8) -> bool {
        let (c, r) = ((site % self.width) as i32, (site / self.width) as i32);
        let owned = |c: i32, r: i32| {
            c >= 0
                && r >= 0
                && (c as usize) < self.width
                && (r as usize) < self.height
                && state.who(r as usize * self.width + c as usize) == who
        };
        [(1, 0), (0, 1), (1, 1), (1, -1)].iter().any(|&(dc, dr)| {
            let mut run = 1;
            for sign in [1, -1] {
                let (mut x, mut y) = (c + sign * dc, r + sign * dr);
                while owned(x, y) {
                    run += 1;
                    x += sign * dc;
                    y += sign * dr;
                }
            }
            run >= self.k
        })
    }
}

impl Game for LineGame {
    fn meta(&self) -> &GameMeta {
        &self.meta
    }

    fn initial_state(&self) -> GameState {
        self.meta.new_state()
    }

    fn legal_actions_into(&self, state: &GameState, out: &mut Vec<Action>) {
        out.extend(
            (0..self.meta.num_sites())
                .filter(|&s| state.is_empty(s))
                .map(Action::place),
        );
    }

    fn apply(&self, state: &mut GameState, action: &Action) {
        let to = action.to as usize;
        let p = state.mover;
        debug_assert!(state.is_empty(to), "occupied site {to}");
        state.set_site(to, p, p).expect("valid piece");
        finish_move(state, action, 2);
        if self.completes_line(state, to, p) {
            state.status = Status::Won(p);
        } else if state.ply as usize == self.meta.num_sites() {
            state.status = Status::Draw;
        }
    }

    fn action_domain(&self, _player: u8) -> Vec<(i32, i32)> {
        (0..self.meta.num_sites() as i32).map(|s| (-1, s)).collect()
    }
}
