use serde::{Deserialize, Serialize};

use super::cards::{Card, CardKind, Color, PerColor};
use super::EngineError;

/// How many copies of each card kind the deck contains.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeckCounts {
    pub property: PerColor<u32>,
    /// Parallel to [`GameConfig::cash_card_values`].
    pub cash: Vec<u32>,
    pub rent: PerColor<u32>,
    pub just_say_no: u32,
}

/// Ruleset parameters. Defaults reproduce the reference training setup: two sets to win,
/// five-card opening hands, two draws per streak, two turns per streak, a 250 turn cap and
/// an 83 card deck.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameConfig {
    pub required_property_sets: u32,
    pub initial_hand_size: u32,
    pub new_cards_per_turn: u32,
    pub turns_per_streak: u32,
    pub max_turns: u32,
    pub cash_card_values: Vec<u32>,
    pub deck_counts: DeckCounts,
    pub property_set_size: PerColor<u32>,
    pub rent_progression: PerColor<Vec<u32>>,
    pub property_cash_value: PerColor<u32>,
    pub random_seed: u64,
}

impl Default for GameConfig {
    fn default() -> Self {
        GameConfig {
            required_property_sets: 2,
            initial_hand_size: 5,
            new_cards_per_turn: 2,
            turns_per_streak: 2,
            max_turns: 250,
            cash_card_values: vec![1, 3],
            deck_counts: DeckCounts {
                property: PerColor::splat(10),
                cash: vec![10, 10],
                rent: PerColor::splat(10),
                just_say_no: 3,
            },
            property_set_size: PerColor::splat(3),
            rent_progression: PerColor::new(vec![1, 2, 3], vec![2, 4, 7], vec![1, 2, 4]),
            property_cash_value: PerColor::new(1, 2, 2),
            random_seed: 1,
        }
    }
}

impl GameConfig {
    pub fn deck_size(&self) -> u32 {
        let d = &self.deck_counts;
        d.property.iter().map(|(_, n)| n).sum::<u32>()
            + d.cash.iter().sum::<u32>()
            + d.rent.iter().map(|(_, n)| n).sum::<u32>()
            + d.just_say_no
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        let fail = |field: &str, msg: String| Err(EngineError::Config { field: field.to_string(), message: msg });
        if self.required_property_sets < 1 {
            return fail("required_property_sets", "must be at least 1".into());
        }
        if self.turns_per_streak < 1 {
            return fail("turns_per_streak", "must be at least 1".into());
        }
        if self.max_turns < 1 {
            return fail("max_turns", "must be at least 1".into());
        }
        if self.cash_card_values.is_empty() || self.cash_card_values.contains(&0) {
            return fail("cash_card_values", "must list at least one positive denomination".into());
        }
        if self.deck_counts.cash.len() != self.cash_card_values.len() {
            return fail(
                "deck_counts.cash",
                format!(
                    "has {} entries but cash_card_values has {}",
                    self.deck_counts.cash.len(),
                    self.cash_card_values.len()
                ),
            );
        }
        for color in Color::ALL {
            let size = self.property_set_size[color];
            if size == 0 {
                return fail("property_set_size", format!("{color} set size must be at least 1"));
            }
            let progression = &self.rent_progression[color];
            if progression.len() != size as usize {
                return fail(
                    "rent_progression",
                    format!("{color} progression has {} steps but the set size is {size}", progression.len()),
                );
            }
            if progression.first() == Some(&0) || progression.windows(2).any(|w| w[0] >= w[1]) {
                return fail(
                    "rent_progression",
                    format!("{color} progression must be positive and strictly increasing"),
                );
            }
        }
        let needed = 2 * self.initial_hand_size;
        if self.deck_size() < needed {
            return fail(
                "deck_counts",
                format!("deck of {} cards cannot deal two hands of {}", self.deck_size(), self.initial_hand_size),
            );
        }
        Ok(())
    }

    /// Rent charged for `color` when the initiator owns `owned_count` properties of it.
    pub fn rent_amount(&self, color: Color, owned_count: u32) -> Result<u32, EngineError> {
        if owned_count == 0 {
            return Err(EngineError::RentNotPlayable(color));
        }
        let progression = &self.rent_progression[color];
        let step = owned_count.min(self.property_set_size[color]) as usize;
        Ok(progression[step.min(progression.len()) - 1])
    }

    /// The full, unshuffled deck with ids assigned in construction order.
    pub fn build_deck(&self) -> Vec<Card> {
        let mut deck = Vec::with_capacity(self.deck_size() as usize);
        let mut push = |kind: CardKind, value: u32| {
            let id = deck.len() as u16;
            deck.push(Card { id, kind, value });
        };
        for color in Color::ALL {
            for _ in 0..self.deck_counts.property[color] {
                push(CardKind::Property { color }, self.property_cash_value[color]);
            }
        }
        for (&value, &count) in self.cash_card_values.iter().zip(&self.deck_counts.cash) {
            for _ in 0..count {
                push(CardKind::Cash, value);
            }
        }
        for color in Color::ALL {
            for _ in 0..self.deck_counts.rent[color] {
                push(CardKind::Rent { color }, 0);
            }
        }
        for _ in 0..self.deck_counts.just_say_no {
            push(CardKind::JustSayNo, 0);
        }
        deck
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_deck_matches_reference_composition() {
        let config = GameConfig::default();
        config.validate().unwrap();
        let deck = config.build_deck();
        assert_eq!(deck.len(), 83);
        assert_eq!(deck.iter().filter(|c| c.is_property()).count(), 30);
        assert_eq!(deck.iter().filter(|c| c.is_cash()).count(), 20);
        assert_eq!(deck.iter().filter(|c| matches!(c.kind, CardKind::Rent { .. })).count(), 30);
        assert_eq!(deck.iter().filter(|c| c.kind == CardKind::JustSayNo).count(), 3);
        assert!(deck.iter().enumerate().all(|(i, c)| c.id as usize == i));
    }

    #[test]
    fn rent_amounts() {
        let config = GameConfig::default();
        assert_eq!(config.rent_amount(Color::Green, 1).unwrap(), 2);
        assert_eq!(config.rent_amount(Color::Green, 2).unwrap(), 4);
        assert_eq!(config.rent_amount(Color::Green, 3).unwrap(), 7);
        assert_eq!(config.rent_amount(Color::Brown, 3).unwrap(), 3);
        assert_eq!(config.rent_amount(Color::Pink, 5).unwrap(), 4);
        assert!(matches!(config.rent_amount(Color::Green, 0), Err(EngineError::RentNotPlayable(Color::Green))));
    }

    #[test]
    fn rejects_bad_configs() {
        let mut config = GameConfig::default();
        config.rent_progression.green = vec![2, 2, 7];
        assert!(matches!(config.validate(), Err(EngineError::Config { field, .. }) if field == "rent_progression"));

        let mut config = GameConfig::default();
        config.property_set_size.pink = 0;
        assert!(config.validate().is_err());

        let config = GameConfig {
            deck_counts: DeckCounts {
                property: PerColor::new(2, 0, 0),
                cash: vec![2, 2],
                rent: PerColor::splat(0),
                just_say_no: 0,
            },
            ..GameConfig::default()
        };
        assert_eq!(config.deck_size(), 6);
        assert!(matches!(config.validate(), Err(EngineError::Config { field, .. }) if field == "deck_counts"));
    }
}
