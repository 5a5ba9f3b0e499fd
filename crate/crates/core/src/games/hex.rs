//! Hex on a rhombus of hexagonal cells. Player 1 joins the bottom and top
//! rows (`r = 0`, `r = side-1`); player 2 joins the left and right columns.

use super::{finish_move, Game, GameMeta};
use crate::geometry::build_hex_rhombus;
use crate::state::{Action, GameState, Status};

pub struct Hex {
    meta: GameMeta,
}

impl Hex {
    pub fn new(side: usize) -> Self {
        let mut graph = build_hex_rhombus(side).expect("positive side");
        graph.augment_offboard();
        let idx = |q: usize, r: usize| r * side + q;
        let sides = [
            (0..side).map(|q| idx(q, 0)).collect(),
            (0..side).map(|q| idx(q, side - 1)).collect(),
            (0..side).map(|r| idx(0, r)).collect(),
            (0..side).map(|r| idx(side - 1, r)).collect(),
        ];
        for s in sides {
            graph.add_region(s).expect("valid region");
        }
        Hex {
            meta: GameMeta {
                name: "hex".to_string(),
                players: 2,
                piece_owner: vec![1, 2],
                movement: false,
                graph,
            },
        }
    }

    /// Whether the group containing `site` touches both of `player`'s sides.
    fn connects(&self, state: &GameState, site: usize, player: u8) -> bool {
        let g = &self.meta.graph;
        let (a, b) = if player == 1 { (0, 1) } else { (2, 3) };
        let (da, db) = (g.region_dist(a), g.region_dist(b));
        let mut seen = vec![false; g.num_sites()];
        let mut stack = vec![site];
        seen[site] = true;
        let (mut hit_a, mut hit_b) = (false, false);
        while let Some(s) = stack.pop() {
            hit_a |= da[s] == 0;
            hit_b |= db[s] == 0;
            if hit_a && hit_b {
                return true;
            }
            for t in g.onboard_neighbours(s) {
                if !seen[t] && state.who(t) == player {
                    seen[t] = true;
                    stack.push(t);
                }
            }
        }
        false
    }
}

impl Game for Hex {
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
        debug_assert!(state.is_empty(to));
        state.set_site(to, p, p).expect("valid piece");
        finish_move(state, action, 2);
        if self.connects(state, to, p) {
            state.status = Status::Won(p);
        } else if state.ply as usize == self.meta.num_sites() {
            state.status = Status::Draw;
        }
    }

    fn action_domain(&self, _player: u8) -> Vec<(i32, i32)> {
        (0..self.meta.num_sites() as i32).map(|s| (-1, s)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn board_and_regions() {
        let h = Hex::new(7);
        assert_eq!(h.meta().num_sites(), 49);
        assert_eq!(h.meta().graph.regions().len(), 4);
        assert_eq!(h.legal_actions(&h.initial_state()).len(), 49);
    }

    #[test]
    fn column_wins_for_player_one() {
        let h = Hex::new(3);
        let mut s = h.initial_state();
        // player 1 plays q=0 column bottom to top; player 2 plays q=2
        for (a, b) in [(0, 2), (3, 5)] {
            h.apply(&mut s, &Action::place(a));
            h.apply(&mut s, &Action::place(b));
        }
        assert!(!s.is_terminal());
        h.apply(&mut s, &Action::place(6));
        assert_eq!(s.status, Status::Won(1));
    }
}
