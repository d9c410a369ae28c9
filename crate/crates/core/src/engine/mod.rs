//! Rules engine for the two-player rent/response card game.
//!
//! Players build colored property sets, bank cash and charge rent. Playing a rent card opens a
//! bounded response phase: control passes to the opponent, who alone acts (paying with cash or
//! property, cancelling with Just Say No, or yielding when broke) until the debt is settled,
//! after which the initiator's turn concludes. Turns come in streaks of `turns_per_streak`;
//! passing ends a streak early.
//!
//! Every transition is a pure function of the state and the action; the only randomness is the
//! seeded deck shuffle at deal time.

mod cards;
mod config;
mod rules;
mod state;
mod view;

#[cfg(test)]
mod tests;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cards::{Card, CardId, CardKind, Color, PerColor};
pub use config::{DeckCounts, GameConfig};
pub use rules::{new_game, Decision};
pub use state::{
    ConcreteAction, InitiatorSnapshot, Outcome, PlayerZone, PropertySet, ResponseContext, SetTarget, TurnState,
    WorldState,
};
pub use view::{InfoView, PublicZone, ViewDecision};

/// Why a concrete action was rejected.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Error)]
#[serde(rename_all = "snake_case")]
pub enum IllegalReason {
    #[error("the card is not in the acting player's hand")]
    CardNotInHand,
    #[error("the card is the wrong kind for this action")]
    WrongCardKind,
    #[error(
        "a property must join the fullest incomplete set of its color and may only start a new set when none exists"
    )]
    WrongSetTarget,
    #[error("rent can only be charged for a color in which the player owns at least one property")]
    RentColorNotOwned,
    #[error("payments, Just Say No and yielding are only possible while responding to rent")]
    NotInResponsePhase,
    #[error("a rent demand is open; only the responder's payment, Just Say No or yield actions are allowed")]
    ResponsePhaseOpen,
    #[error("Just Say No may only be played as the first response to a rent demand")]
    JustSayNoAfterPayment,
    #[error("the card is not in the responder's cash pile")]
    CardNotInCashPile,
    #[error("the property is not on the responder's table")]
    PropertyNotOwned,
    #[error("yielding is only allowed once no cash or property is left to pay with")]
    YieldWithAssets,
}

impl IllegalReason {
    /// Stable snake_case identifier used in API error payloads.
    pub fn code(&self) -> String {
        serde_json::to_value(self).ok().and_then(|v| v.as_str().map(str::to_owned)).unwrap_or_default()
    }
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum EngineError {
    #[error("invalid game config `{field}`: {message}")]
    Config { field: String, message: String },
    #[error("the game is already over")]
    Terminal,
    #[error("the game is not over yet")]
    NotTerminal,
    #[error("no rent is charged for {0} without an owned {0} property")]
    RentNotPlayable(Color),
    #[error("player index {0} is out of range for a two-player game")]
    BadPlayer(usize),
    #[error("illegal action {action:?}: {reason}")]
    Illegal { action: ConcreteAction, reason: IllegalReason },
}

/// Serializes with sorted object keys and no whitespace.
pub fn canonical_json<T: Serialize>(value: &T) -> String {
    let value = serde_json::to_value(value).expect("engine types always serialize");
    serde_json::to_string(&value).expect("json values always serialize")
}
