use std::fmt;
use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};

/// Property colors in their fixed tie-break order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Color {
    Brown,
    Green,
    Pink,
}

impl Color {
    pub const ALL: [Color; 3] = [Color::Brown, Color::Green, Color::Pink];

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Color {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// One value per property color, serialized as `{"Brown": .., "Green": .., "Pink": ..}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerColor<T> {
    #[serde(rename = "Brown")]
    pub brown: T,
    #[serde(rename = "Green")]
    pub green: T,
    #[serde(rename = "Pink")]
    pub pink: T,
}

impl<T> PerColor<T> {
    pub fn new(brown: T, green: T, pink: T) -> Self {
        PerColor { brown, green, pink }
    }

    pub fn iter(&self) -> impl Iterator<Item = (Color, &T)> {
        [(Color::Brown, &self.brown), (Color::Green, &self.green), (Color::Pink, &self.pink)].into_iter()
    }
}

impl<T: Clone> PerColor<T> {
    pub fn splat(value: T) -> Self {
        PerColor { brown: value.clone(), green: value.clone(), pink: value }
    }
}

impl<T> Index<Color> for PerColor<T> {
    type Output = T;

    fn index(&self, color: Color) -> &T {
        match color {
            Color::Brown => &self.brown,
            Color::Green => &self.green,
            Color::Pink => &self.pink,
        }
    }
}

impl<T> IndexMut<Color> for PerColor<T> {
    fn index_mut(&mut self, color: Color) -> &mut T {
        match color {
            Color::Brown => &mut self.brown,
            Color::Green => &mut self.green,
            Color::Pink => &mut self.pink,
        }
    }
}

/// Stable identifier of a card within one deck.
pub type CardId = u16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CardKind {
    Property { color: Color },
    Cash,
    Rent { color: Color },
    JustSayNo,
}

/// A physical card. `value` is the dollar amount the card is worth when paid as rent
/// (the denomination for cash, the configured cash value for properties, zero otherwise).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Card {
    pub id: CardId,
    pub kind: CardKind,
    pub value: u32,
}

impl Card {
    pub fn color(&self) -> Option<Color> {
        match self.kind {
            CardKind::Property { color } | CardKind::Rent { color } => Some(color),
            CardKind::Cash | CardKind::JustSayNo => None,
        }
    }

    pub fn is_property(&self) -> bool {
        matches!(self.kind, CardKind::Property { .. })
    }

    pub fn is_cash(&self) -> bool {
        matches!(self.kind, CardKind::Cash)
    }
}

impl fmt::Display for Card {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            CardKind::Property { color } => write!(f, "#{} {color} property", self.id),
            CardKind::Cash => write!(f, "#{} ${} cash", self.id, self.value),
            CardKind::Rent { color } => write!(f, "#{} {color} rent", self.id),
            CardKind::JustSayNo => write!(f, "#{} Just Say No", self.id),
        }
    }
}
