//! Intent abstraction: an information set is reduced to the sorted set of abstract actions
//! available to the acting player plus the streak index, and hashed into a stable string key.
//! The greedy resolver maps a chosen abstract action back to one concrete move.

use std::cmp::Ordering;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{
    canonical_json, Card, CardKind, ConcreteAction, Decision, InfoView, SetTarget, ViewDecision, WorldState,
};

pub const ABSTRACTION_CLS: &str = "IntentStateAbstraction";
pub const RESOLVER_CLS: &str = "GreedyActionResolver";

/// The closed vocabulary of intents. The discriminant is the action index used in regret and
/// policy tables.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[repr(u8)]
pub enum AbstractAction {
    StartNewPropertySet = 0,
    AddToPropertySet = 1,
    CompletePropertySet = 2,
    Cash = 3,
    AttemptCollectRent = 4,
    JustSayNo = 5,
    GiveOpponentCash = 6,
    GiveOpponentProperty = 7,
    Pass = 8,
    Yield = 9,
    Other = 10,
}

impl AbstractAction {
    pub const COUNT: usize = 11;

    pub const ALL: [AbstractAction; AbstractAction::COUNT] = [
        AbstractAction::StartNewPropertySet,
        AbstractAction::AddToPropertySet,
        AbstractAction::CompletePropertySet,
        AbstractAction::Cash,
        AbstractAction::AttemptCollectRent,
        AbstractAction::JustSayNo,
        AbstractAction::GiveOpponentCash,
        AbstractAction::GiveOpponentProperty,
        AbstractAction::Pass,
        AbstractAction::Yield,
        AbstractAction::Other,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Self> {
        Self::ALL.get(index).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            AbstractAction::StartNewPropertySet => "StartNewPropertySet",
            AbstractAction::AddToPropertySet => "AddToPropertySet",
            AbstractAction::CompletePropertySet => "CompletePropertySet",
            AbstractAction::Cash => "Cash",
            AbstractAction::AttemptCollectRent => "AttemptCollectRent",
            AbstractAction::JustSayNo => "JustSayNo",
            AbstractAction::GiveOpponentCash => "GiveOpponentCash",
            AbstractAction::GiveOpponentProperty => "GiveOpponentProperty",
            AbstractAction::Pass => "Pass",
            AbstractAction::Yield => "Yield",
            AbstractAction::Other => "Other",
        }
    }

    /// Column name used in metrics files.
    pub fn snake_name(self) -> &'static str {
        match self {
            AbstractAction::StartNewPropertySet => "start_new_property_set",
            AbstractAction::AddToPropertySet => "add_to_property_set",
            AbstractAction::CompletePropertySet => "complete_property_set",
            AbstractAction::Cash => "cash",
            AbstractAction::AttemptCollectRent => "attempt_collect_rent",
            AbstractAction::JustSayNo => "just_say_no",
            AbstractAction::GiveOpponentCash => "give_opponent_cash",
            AbstractAction::GiveOpponentProperty => "give_opponent_property",
            AbstractAction::Pass => "pass",
            AbstractAction::Yield => "yield",
            AbstractAction::Other => "other",
        }
    }

    /// Everything except Pass and Yield plays (or hands over) a card.
    pub fn is_card_action(self) -> bool {
        !matches!(self, AbstractAction::Pass | AbstractAction::Yield)
    }

    pub fn is_suppressed(self) -> bool {
        self == AbstractAction::Other
    }
}

/// Abstract actions are ordered by name so the serialized abstract state is canonical.
impl Ord for AbstractAction {
    fn cmp(&self, other: &Self) -> Ordering {
        self.name().cmp(other.name())
    }
}

impl PartialOrd for AbstractAction {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for AbstractAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A set of abstract actions as a bitmask over action indices.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ActionMask(pub u16);

impl ActionMask {
    pub fn insert(&mut self, action: AbstractAction) {
        self.0 |= 1 << action.index();
    }

    pub fn contains(self, action: AbstractAction) -> bool {
        self.0 & (1 << action.index()) != 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    /// Members in index order.
    pub fn iter(self) -> impl Iterator<Item = AbstractAction> {
        AbstractAction::ALL.into_iter().filter(move |a| self.contains(*a))
    }
}

impl FromIterator<AbstractAction> for ActionMask {
    fn from_iter<I: IntoIterator<Item = AbstractAction>>(iter: I) -> Self {
        let mut mask = ActionMask::default();
        for action in iter {
            mask.insert(action);
        }
        mask
    }
}

/// The abstracted information set: available intents (sorted by name) and the streak index.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AbstractState {
    pub actions: Vec<AbstractAction>,
    pub streak_idx: u32,
}

impl AbstractState {
    pub fn new(actions: impl IntoIterator<Item = AbstractAction>, streak_idx: u32) -> Self {
        Self::from_mask(actions.into_iter().collect(), streak_idx)
    }

    pub fn from_mask(mask: ActionMask, streak_idx: u32) -> Self {
        let mut actions: Vec<_> = mask.iter().collect();
        actions.sort();
        AbstractState { actions, streak_idx }
    }

    pub fn mask(&self) -> ActionMask {
        self.actions.iter().copied().collect()
    }

    pub fn canonical_json(&self) -> String {
        canonical_json(self)
    }
}

/// `{player_idx}@{abstraction_cls}@{md5(canonical abstract state)}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct InfoSetKey(pub String);

impl InfoSetKey {
    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// The player index encoded in the key's first field.
    pub fn player(&self) -> Option<usize> {
        self.0.split('@').next()?.parse().ok()
    }
}

impl fmt::Display for InfoSetKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

pub fn infoset_key(player_idx: usize, state: &AbstractState) -> InfoSetKey {
    let digest = md5::compute(state.canonical_json().as_bytes());
    InfoSetKey(format!("{player_idx}@{ABSTRACTION_CLS}@{digest:x}"))
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum AbstractionError {
    #[error("the viewing player is not the one to act")]
    NotToAct,
    #[error("{0:?} is not a legal action here")]
    IllegalAction(ConcreteAction),
    #[error("{0} is not available in this state")]
    Unavailable(AbstractAction),
}

/// Intent of one legal move, given the card it uses.
fn classify(decision: &Decision<'_>, action: &ConcreteAction, card: Option<&Card>) -> AbstractAction {
    match *action {
        ConcreteAction::PlayProperty { target, .. } => {
            let Some(CardKind::Property { color }) = card.map(|c| c.kind) else {
                return AbstractAction::Other;
            };
            let current = match target {
                SetTarget::New => 0,
                SetTarget::Existing { set } => decision.zone.property_sets.get(set).map_or(0, |s| s.cards.len()),
            };
            if current as u32 + 1 >= decision.config.property_set_size[color] {
                AbstractAction::CompletePropertySet
            } else if target == SetTarget::New {
                AbstractAction::StartNewPropertySet
            } else {
                AbstractAction::AddToPropertySet
            }
        }
        ConcreteAction::PlayCash { .. } => AbstractAction::Cash,
        ConcreteAction::PlayRent { .. } => AbstractAction::AttemptCollectRent,
        ConcreteAction::PlayJustSayNo { .. } => AbstractAction::JustSayNo,
        ConcreteAction::PayCash { .. } => AbstractAction::GiveOpponentCash,
        ConcreteAction::PayProperty { .. } => AbstractAction::GiveOpponentProperty,
        ConcreteAction::Pass => AbstractAction::Pass,
        ConcreteAction::Yield => AbstractAction::Yield,
    }
}

/// Greedy preference among concrete moves sharing one intent; smaller sorts first.
type Preference = (i64, i64, i64);

fn preference(decision: &Decision<'_>, intent: AbstractAction, card: Option<&Card>) -> Preference {
    let Some(card) = card else {
        return (0, 0, 0);
    };
    let id = i64::from(card.id);
    match (intent, card.kind) {
        (AbstractAction::Cash | AbstractAction::GiveOpponentCash, _) => (-i64::from(card.value), 0, id),
        (AbstractAction::GiveOpponentProperty, _) => (i64::from(card.value), 0, id),
        (AbstractAction::AttemptCollectRent, CardKind::Rent { color }) => {
            let owned = decision.zone.owned_count(color);
            let rent = decision.config.rent_amount(color, owned).unwrap_or(0);
            (-i64::from(rent), color.index() as i64, id)
        }
        _ => (0, 0, id),
    }
}

/// One pass over the legal moves of a decision: the available intents and, for each, the
/// concrete move the greedy resolver would pick.
#[derive(Clone, Debug)]
pub struct Analysis {
    pub player: usize,
    pub mask: ActionMask,
    pub streak_idx: u32,
    choices: [Option<ConcreteAction>; AbstractAction::COUNT],
}

impl Analysis {
    pub fn of(decision: &Decision<'_>) -> Self {
        let mut mask = ActionMask::default();
        let mut best: [Option<(ConcreteAction, Preference)>; AbstractAction::COUNT] = [None; AbstractAction::COUNT];
        decision.visit_legal(|action, card| {
            let intent = classify(decision, &action, card);
            mask.insert(intent);
            let pref = preference(decision, intent, card);
            let slot = &mut best[intent.index()];
            if slot.is_none_or(|(_, current)| pref < current) {
                *slot = Some((action, pref));
            }
        });
        Analysis {
            player: decision.player,
            mask,
            streak_idx: decision.streak_idx,
            choices: best.map(|b| b.map(|(action, _)| action)),
        }
    }

    /// `None` once the game is over.
    pub fn of_world(world: &WorldState) -> Option<Self> {
        world.decision().map(|d| Analysis::of(&d))
    }

    pub fn state(&self) -> AbstractState {
        AbstractState::from_mask(self.mask, self.streak_idx)
    }

    pub fn key(&self) -> InfoSetKey {
        infoset_key(self.player, &self.state())
    }

    pub fn resolve(&self, chosen: AbstractAction) -> Result<ConcreteAction, AbstractionError> {
        self.choices[chosen.index()].ok_or(AbstractionError::Unavailable(chosen))
    }
}

fn view_decision(view: &InfoView) -> Result<ViewDecision, AbstractionError> {
    ViewDecision::new(view).ok_or(AbstractionError::NotToAct)
}

/// Intent of a legal concrete move from the acting player's view.
pub fn abstract_action_of(view: &InfoView, action: &ConcreteAction) -> Result<AbstractAction, AbstractionError> {
    let vd = view_decision(view)?;
    let decision = vd.decision();
    let mut found = None;
    decision.visit_legal(|legal, card| {
        if legal == *action {
            found = Some(classify(&decision, &legal, card));
        }
    });
    found.ok_or(AbstractionError::IllegalAction(*action))
}

pub fn abstract_state(view: &InfoView) -> Result<AbstractState, AbstractionError> {
    let vd = view_decision(view)?;
    Ok(Analysis::of(&vd.decision()).state())
}

/// Greedy resolution: highest-value cash, lowest-value property to give away, highest-rent color
/// (Brown < Green < Pink on ties), otherwise the lowest card id. The rng is unused.
pub fn resolve<R: Rng + ?Sized>(
    view: &InfoView,
    chosen: AbstractAction,
    _rng: &mut R,
) -> Result<ConcreteAction, AbstractionError> {
    let vd = view_decision(view)?;
    Analysis::of(&vd.decision()).resolve(chosen)
}
