//! C bindings for spatfeat.
//!
//! Every object crosses the boundary as an opaque pointer created by a
//! `*_new` function and released by the matching `*_free`. Fallible calls
//! return an [`SfStatus`]; on failure [`sf_last_error`] describes what went
//! wrong on the calling thread. Functions that fill caller buffers take a
//! capacity and report the required length, returning
//! `SF_STATUS_BUFFER_TOO_SMALL` when it does not fit.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;
use std::sync::Arc;

use spatfeat::backends::{Backend, BuildConfig, FeatureEvaluator, FeatureVector, Scratch};
use spatfeat::features::{generate_atomic, FeatureSet};
use spatfeat::games::{self, Game};
use spatfeat::state::{Action, GameState, Status};
use spatfeat::Error;

/// Result of a fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    UnknownGame = 4,
    Parse = 5,
    Build = 6,
    Io = 7,
    BufferTooSmall = 8,
    IllegalAction = 9,
    Panic = 10,
}

/// A move. Placements have `from == -1`; a pass has both ends at -1.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SfAction {
    pub from: i32,
    pub to: i32,
    pub tag: u32,
}

impl From<Action> for SfAction {
    fn from(a: Action) -> Self {
        SfAction {
            from: a.from,
            to: a.to,
            tag: a.tag,
        }
    }
}

impl From<SfAction> for Action {
    fn from(a: SfAction) -> Self {
        Action {
            from: a.from,
            to: a.to,
            tag: a.tag,
        }
    }
}

/// A built-in game.
pub struct SfGame {
    game: Arc<dyn Game>,
}

/// A game position, tied to the game that created it.
pub struct SfState {
    game: Arc<dyn Game>,
    state: GameState,
}

/// A parsed or generated set of spatial features.
pub struct SfFeatureSet {
    set: FeatureSet,
}

/// Feature evaluator for one game, with its own scratch space. Not safe to
/// use from several threads at once.
pub struct SfEvaluator {
    game: Arc<dyn Game>,
    inner: FeatureEvaluator,
    scratch: Scratch,
    out: FeatureVector,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    let c = CString::new(msg).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

struct Failure(SfStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::UnknownGame(_) => SfStatus::UnknownGame,
            Error::Syntax { .. } | Error::Validation(_) | Error::Format { .. } => SfStatus::Parse,
            Error::Build(_) => SfStatus::Build,
            Error::Io { .. } | Error::Csv { .. } => SfStatus::Io,
            _ => SfStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn fail(status: SfStatus, msg: impl Into<String>) -> Failure {
    Failure(status, msg.into())
}

/// Runs `f`, turning errors and panics into a status plus a stored message.
fn guard(f: impl FnOnce() -> Outcome) -> SfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SfStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            SfStatus::Panic
        }
    }
}

unsafe fn as_ref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref()
        .ok_or_else(|| fail(SfStatus::NullPointer, format!("{what} is null")))
}

unsafe fn as_mut<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut()
        .ok_or_else(|| fail(SfStatus::NullPointer, format!("{what} is null")))
}

unsafe fn as_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(fail(SfStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(SfStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Outcome {
    let out = as_mut(out, "output pointer")?;
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

/// Copies `items` into a caller buffer of `cap` elements, always reporting
/// the full length through `len`.
unsafe fn fill<T: Copy>(items: &[T], buf: *mut T, cap: usize, len: *mut usize) -> Outcome {
    *as_mut(len, "length pointer")? = items.len();
    if items.len() > cap {
        return Err(fail(
            SfStatus::BufferTooSmall,
            format!("need {} elements, buffer holds {cap}", items.len()),
        ));
    }
    if !items.is_empty() {
        if buf.is_null() {
            return Err(fail(SfStatus::NullPointer, "buffer is null"));
        }
        ptr::copy_nonoverlapping(items.as_ptr(), buf, items.len());
    }
    Ok(())
}

unsafe fn free<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Message of the last failed call on this thread, or an empty string.
/// Valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn sf_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Creates a built-in game: `tictactoe`, `gomoku`, `hex` or `breakthrough`.
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sf_game_new(name: *const c_char, out: *mut *mut SfGame) -> SfStatus {
    guard(|| {
        let game = games::by_name(as_str(name, "name")?)?;
        put(out, SfGame { game })
    })
}

/// # Safety
/// `game` must come from [`sf_game_new`] or be null.
#[no_mangle]
pub unsafe extern "C" fn sf_game_free(game: *mut SfGame) {
    free(game)
}

/// Number of board sites, or 0 for a null game.
///
/// # Safety
/// `game` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn sf_game_num_sites(game: *const SfGame) -> usize {
    game.as_ref().map_or(0, |g| g.game.meta().num_sites())
}

/// Number of players, or 0 for a null game.
///
/// # Safety
/// `game` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn sf_game_num_players(game: *const SfGame) -> u8 {
    game.as_ref().map_or(0, |g| g.game.meta().players)
}

/// Creates the initial position of `game`.
///
/// # Safety
/// `game` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sf_state_new(game: *const SfGame, out: *mut *mut SfState) -> SfStatus {
    guard(|| {
        let game = as_ref(game, "game")?.game.clone();
        let state = game.initial_state();
        put(out, SfState { game, state })
    })
}

/// # Safety
/// `state` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sf_state_clone(state: *const SfState, out: *mut *mut SfState) -> SfStatus {
    guard(|| {
        let s = as_ref(state, "state")?;
        put(
            out,
            SfState {
                game: s.game.clone(),
                state: s.state.clone(),
            },
        )
    })
}

/// # Safety
/// `state` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn sf_state_free(state: *mut SfState) {
    free(state)
}

/// Player to move (1-based), or 0 for a null state.
///
/// # Safety
/// `state` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn sf_state_mover(state: *const SfState) -> u8 {
    state.as_ref().map_or(0, |s| s.state.mover)
}

/// Whether the game is over. Null states count as terminal.
///
/// # Safety
/// `state` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn sf_state_is_terminal(state: *const SfState) -> bool {
    state.as_ref().is_none_or(|s| s.state.is_terminal())
}

/// Winning player of a finished game, or 0 for ongoing, drawn or null.
///
/// # Safety
/// `state` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn sf_state_winner(state: *const SfState) -> u8 {
    match state.as_ref().map(|s| s.state.status) {
        Some(Status::Won(w)) => w,
        _ => 0,
    }
}

/// Site owner (0 = empty, else player), or -1 for a bad site or null state.
///
/// # Safety
/// `state` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn sf_state_owner(state: *const SfState, site: usize) -> i32 {
    match state.as_ref() {
        Some(s) if site < s.game.meta().num_sites() => s.state.who(site) as i32,
        _ => -1,
    }
}

/// Writes the legal actions into `buf` (capacity `cap`); `len` receives
/// the count. Terminal states have none.
///
/// # Safety
/// `state` must be a live handle, `len` valid, and `buf` valid for `cap`
/// elements when `cap > 0`.
#[no_mangle]
pub unsafe extern "C" fn sf_state_legal_actions(
    state: *const SfState,
    buf: *mut SfAction,
    cap: usize,
    len: *mut usize,
) -> SfStatus {
    guard(|| {
        let s = as_ref(state, "state")?;
        let actions: Vec<SfAction> = if s.state.is_terminal() {
            Vec::new()
        } else {
            s.game.legal_actions(&s.state).into_iter().map(SfAction::from).collect()
        };
        fill(&actions, buf, cap, len)
    })
}

/// Plays a legal action. Anything else leaves the state untouched and
/// returns `SF_STATUS_ILLEGAL_ACTION`.
///
/// # Safety
/// `state` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn sf_state_apply(state: *mut SfState, action: SfAction) -> SfStatus {
    guard(|| {
        let s = as_mut(state, "state")?;
        let action = Action::from(action);
        if s.state.is_terminal() || !s.game.legal_actions(&s.state).contains(&action) {
            return Err(fail(SfStatus::IllegalAction, format!("illegal action {action:?}")));
        }
        s.game.apply(&mut s.state, &action);
        Ok(())
    })
}

/// Parses a feature-set file body (header line, then one feature per line).
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sf_feature_set_parse(text: *const c_char, out: *mut *mut SfFeatureSet) -> SfStatus {
    guard(|| {
        let set = FeatureSet::from_text(as_str(text, "text")?, Path::new("<memory>"))?;
        put(out, SfFeatureSet { set })
    })
}

/// Generates the atomic set with walks of up to `max_len` steps and
/// straight walks of up to `max_straight` steps.
///
/// # Safety
/// `game` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sf_feature_set_atomic(
    game: *const SfGame,
    max_len: usize,
    max_straight: usize,
    out: *mut *mut SfFeatureSet,
) -> SfStatus {
    guard(|| {
        let game = as_ref(game, "game")?;
        if max_len == 0 || max_straight < max_len {
            return Err(fail(
                SfStatus::InvalidArgument,
                format!("need 1 <= max_len <= max_straight, got {max_len} and {max_straight}"),
            ));
        }
        let set = generate_atomic(game.game.meta(), max_len, max_straight);
        put(out, SfFeatureSet { set })
    })
}

/// Number of features, or 0 for a null set.
///
/// # Safety
/// `set` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn sf_feature_set_len(set: *const SfFeatureSet) -> usize {
    set.as_ref().map_or(0, |s| s.set.len())
}

/// Serialises the set as file text into `buf` (capacity `cap` bytes,
/// including the NUL). `len` receives the text length without the NUL.
///
/// # Safety
/// `set` must be a live handle, `len` valid, and `buf` valid for `cap`
/// bytes when `cap > 0`.
#[no_mangle]
pub unsafe extern "C" fn sf_feature_set_to_text(
    set: *const SfFeatureSet,
    buf: *mut c_char,
    cap: usize,
    len: *mut usize,
) -> SfStatus {
    guard(|| {
        let text = as_ref(set, "feature set")?.set.to_text();
        let mut bytes: Vec<c_char> = text.bytes().map(|b| b as c_char).collect();
        bytes.push(0);
        let status = fill(&bytes, buf, cap, len);
        if let Some(n) = len.as_mut() {
            *n -= 1;
        }
        status
    })
}

/// # Safety
/// `set` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn sf_feature_set_free(set: *mut SfFeatureSet) {
    free(set)
}

/// Builds an evaluator sharing `set` between all players. `backend` is one
/// of `naive`, `tree`, `spatternet` or `spatternet-jit`; null selects
/// `spatternet`.
///
/// # Safety
/// `game` and `set` must be live handles, `backend` null or a NUL-terminated
/// string, and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sf_evaluator_new(
    game: *const SfGame,
    set: *const SfFeatureSet,
    backend: *const c_char,
    out: *mut *mut SfEvaluator,
) -> SfStatus {
    guard(|| {
        let game = as_ref(game, "game")?.game.clone();
        let set = &as_ref(set, "feature set")?.set;
        let backend: Backend = if backend.is_null() {
            Backend::default()
        } else {
            as_str(backend, "backend")?.parse()?
        };
        let inner = FeatureEvaluator::build(
            game.as_ref(),
            std::slice::from_ref(set),
            backend,
            BuildConfig::default(),
        )?;
        put(
            out,
            SfEvaluator {
                game,
                inner,
                scratch: Scratch::default(),
                out: FeatureVector::default(),
            },
        )
    })
}

/// # Safety
/// `ev` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn sf_evaluator_free(ev: *mut SfEvaluator) {
    free(ev)
}

/// Number of features instantiated for `player`, or 0 when out of range.
///
/// # Safety
/// `ev` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn sf_evaluator_num_features(ev: *const SfEvaluator, player: u8) -> usize {
    match ev.as_ref() {
        Some(e) if player >= 1 && player as usize <= e.inner.num_players() => e.inner.num_features(player),
        _ => 0,
    }
}

/// Writes the ascending indices of the mover's features active for
/// `action` in `state` into `buf` (capacity `cap`); `len` receives the
/// count.
///
/// # Safety
/// `ev` and `state` must be live handles, `len` valid, and `buf` valid for
/// `cap` elements when `cap > 0`.
#[no_mangle]
pub unsafe extern "C" fn sf_evaluator_eval(
    ev: *mut SfEvaluator,
    state: *const SfState,
    action: SfAction,
    buf: *mut u32,
    cap: usize,
    len: *mut usize,
) -> SfStatus {
    guard(|| {
        let ev = as_mut(ev, "evaluator")?;
        let s = as_ref(state, "state")?;
        let meta = ev.game.meta();
        if s.game.name() != ev.game.name() {
            return Err(fail(
                SfStatus::InvalidArgument,
                format!(
                    "state belongs to `{}`, evaluator to `{}`",
                    s.game.name(),
                    ev.game.name()
                ),
            ));
        }
        let sites = meta.num_sites() as i32;
        if action.from < -1 || action.from >= sites || action.to < -1 || action.to >= sites {
            return Err(fail(
                SfStatus::InvalidArgument,
                format!("action {action:?} is off the board"),
            ));
        }
        ev.inner.eval(&s.state, &action.into(), &mut ev.scratch, &mut ev.out);
        let active = ev.out.to_vec();
        fill(&active, buf, cap, len)
    })
}
