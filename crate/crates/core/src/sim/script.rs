use super::{GazeErrorType, SimError};
use crate::describer::{ordinal_group, ordinal_phrase};
use crate::disambiguator::ordinal_index;
use crate::geometry::BBox;
use crate::parser::lexicon::normalize_identity;
use crate::parser::{ObjectDescriptor, OrdinalPosition, ParsedCommand, Relation};
use crate::scene::Scene;

/// What the scripted user says to accept a fallback guess.
pub const AFFIRMATIVE_REPLY: &str = "yes";

/// A synthetic correction and the structure it is meant to convey.
#[derive(Debug, Clone, PartialEq)]
pub struct ScriptedCommand {
    pub utterance: String,
    pub intended: ParsedCommand,
}

fn command(target: ObjectDescriptor, relation: Relation) -> ParsedCommand {
    ParsedCommand { target, reference: None, relation, resolved_from: None }
}

fn position_for(index: usize, k: usize) -> OrdinalPosition {
    let phrase = ordinal_phrase(index, k);
    match phrase.as_str() {
        "leftmost" => OrdinalPosition::Leftmost,
        "rightmost" => OrdinalPosition::Rightmost,
        "middle" => OrdinalPosition::Middle,
        _ => OrdinalPosition::Nth(index as u32 + 1),
    }
}

/// The minimal command a user would give after seeing `error`, computed
/// from ground truth. When same-category objects share `view` (the area
/// around the current selection) the target is named by its position
/// among them.
pub fn script_command(scene: &Scene, target_id: u32, error: GazeErrorType, view: &BBox) -> Result<ScriptedCommand, SimError> {
    let target = scene.object(target_id)?;
    let category = normalize_identity(target.category());
    let color = target.color().to_string();

    let group = ordinal_group(scene, target, view);
    if group.len() >= 2 {
        if let Some(index) = group.iter().position(|o| o.id() == target_id) {
            let position = position_for(index, group.len());
            debug_assert_eq!(ordinal_index(position, group.len()), Some(index));
            let utterance = format!("the {} {}", ordinal_phrase(index, group.len()), target.category());
            return Ok(ScriptedCommand { utterance, intended: command(ObjectDescriptor::new(&category, &[]), Relation::Ordinal(position)) });
        }
    }

    let colored = ObjectDescriptor::new(&category, &[color.as_str()]);
    Ok(match error {
        GazeErrorType::PartOf => ScriptedCommand {
            utterance: format!("select the whole {}", target.category()),
            intended: command(ObjectDescriptor::new(&category, &[]), Relation::Includes),
        },
        GazeErrorType::MoreThan => ScriptedCommand {
            utterance: format!("select only the {color} {}", target.category()),
            intended: command(colored, Relation::NextTo),
        },
        GazeErrorType::OtherObject | GazeErrorType::Background => ScriptedCommand {
            utterance: format!("select the {color} {}", target.category()),
            intended: command(colored, Relation::NextTo),
        },
    })
}
