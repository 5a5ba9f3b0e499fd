#ifndef SPATFEAT_H
#define SPATFEAT_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result of a fallible call.
typedef enum SfStatus {
  SF_STATUS_OK = 0,
  SF_STATUS_NULL_POINTER = 1,
  SF_STATUS_INVALID_UTF8 = 2,
  SF_STATUS_INVALID_ARGUMENT = 3,
  SF_STATUS_UNKNOWN_GAME = 4,
  SF_STATUS_PARSE = 5,
  SF_STATUS_BUILD = 6,
  SF_STATUS_IO = 7,
  SF_STATUS_BUFFER_TOO_SMALL = 8,
  SF_STATUS_ILLEGAL_ACTION = 9,
  SF_STATUS_PANIC = 10,
} SfStatus;

// Feature evaluator for one game, with its own scratch space. Not safe to
// use from several threads at once.
typedef struct SfEvaluator SfEvaluator;

// A parsed or generated set of spatial features.
typedef struct SfFeatureSet SfFeatureSet;

// A built-in game.
typedef struct SfGame SfGame;

// A game position, tied to the game that created it.
typedef struct SfState SfState;

// A move. Placements have `from == -1`; a pass has both ends at -1.
typedef struct SfAction {
  int32_t from;
  int32_t to;
  uint32_t tag;
} SfAction;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or an empty string.
// Valid until the next failing call on the same thread.
const char *sf_last_error(void);

// Creates a built-in game: `tictactoe`, `gomoku`, `hex` or `breakthrough`.
//
// # Safety
// `name` must be a NUL-terminated string and `out` a valid pointer.
enum SfStatus sf_game_new(const char *name, struct SfGame **out);

// # Safety
// `game` must come from [`sf_game_new`] or be null.
void sf_game_free(struct SfGame *game);

// Number of board sites, or 0 for a null game.
//
// # Safety
// `game` must be a live handle or null.
size_t sf_game_num_sites(const struct SfGame *game);

// Number of players, or 0 for a null game.
//
// # Safety
// `game` must be a live handle or null.
uint8_t sf_game_num_players(const struct SfGame *game);

// Creates the initial position of `game`.
//
// # Safety
// `game` must be a live handle and `out` a valid pointer.
enum SfStatus sf_state_new(const struct SfGame *game, struct SfState **out);

// # Safety
// `state` must be a live handle and `out` a valid pointer.
enum SfStatus sf_state_clone(const struct SfState *state, struct SfState **out);

// # Safety
// `state` must come from this library or be null.
void sf_state_free(struct SfState *state);

// Player to move (1-based), or 0 for a null state.
//
// # Safety
// `state` must be a live handle or null.
uint8_t sf_state_mover(const struct SfState *state);

// Whether the game is over. Null states count as terminal.
//
// # Safety
// `state` must be a live handle or null.
bool sf_state_is_terminal(const struct SfState *state);

// Winning player of a finished game, or 0 for ongoing, drawn or null.
//
// # Safety
// `state` must be a live handle or null.
uint8_t sf_state_winner(const struct SfState *state);

// Site owner (0 = empty, else player), or -1 for a bad site or null state.
//
// # Safety
// `state` must be a live handle or null.
int32_t sf_state_owner(const struct SfState *state, size_t site);

// Writes the legal actions into `buf` (capacity `cap`); `len` receives
// the count. Terminal states have none.
//
// # Safety
// `state` must be a live handle, `len` valid, and `buf` valid for `cap`
// elements when `cap > 0`.
enum SfStatus sf_state_legal_actions(const struct SfState *state,
                                     struct SfAction *buf,
                                     size_t cap,
                                     size_t *len);

// Plays a legal action. Anything else leaves the state untouched and
// returns `SF_STATUS_ILLEGAL_ACTION`.
//
// # Safety
// `state` must be a live handle.
enum SfStatus sf_state_apply(struct SfState *state, struct SfAction action);

// Parses a feature-set file body (header line, then one feature per line).
//
// # Safety
// `text` must be a NUL-terminated string and `out` a valid pointer.
enum SfStatus sf_feature_set_parse(const char *text, struct SfFeatureSet **out);

// Generates the atomic set with walks of up to `max_len` steps and
// straight walks of up to `max_straight` steps.
//
// # Safety
// `game` must be a live handle and `out` a valid pointer.
enum SfStatus sf_feature_set_atomic(const struct SfGame *game,
                                    size_t max_len,
                                    size_t max_straight,
                                    struct SfFeatureSet **out);

// Number of features, or 0 for a null set.
//
// # Safety
// `set` must be a live handle or null.
size_t sf_feature_set_len(const struct SfFeatureSet *set);

// Serialises the set as file text into `buf` (capacity `cap` bytes,
// including the NUL). `len` receives the text length without the NUL.
//
// # Safety
// `set` must be a live handle, `len` valid, and `buf` valid for `cap`
// bytes when `cap > 0`.
enum SfStatus sf_feature_set_to_text(const struct SfFeatureSet *set,
                                     char *buf,
                                     size_t cap,
                                     size_t *len);

// # Safety
// `set` must come from this library or be null.
void sf_feature_set_free(struct SfFeatureSet *set);

// Builds an evaluator sharing `set` between all players. `backend` is one
// of `naive`, `tree`, `spatternet` or `spatternet-jit`; null selects
// `spatternet`.
//
// # Safety
// `game` and `set` must be live handles, `backend` null or a NUL-terminated
// string, and `out` a valid pointer.
enum SfStatus sf_evaluator_new(const struct SfGame *game,
                               const struct SfFeatureSet *set,
                               const char *backend,
                               struct SfEvaluator **out);

// # Safety
// `ev` must come from this library or be null.
void sf_evaluator_free(struct SfEvaluator *ev);

// Number of features instantiated for `player`, or 0 when out of range.
//
// # Safety
// `ev` must be a live handle or null.
size_t sf_evaluator_num_features(const struct SfEvaluator *ev, uint8_t player);

// Writes the ascending indices of the mover's features active for
// `action` in `state` into `buf` (capacity `cap`); `len` receives the
// count.
//
// # Safety
// `ev` and `state` must be live handles, `len` valid, and `buf` valid for
// `cap` elements when `cap > 0`.
enum SfStatus sf_evaluator_eval(struct SfEvaluator *ev,
                                const struct SfState *state,
                                struct SfAction action,
                                uint32_t *buf,
                                size_t cap,
                                size_t *len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SPATFEAT_H */
