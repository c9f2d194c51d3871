//! Consecutive career windows ("life-stages") and the tenured reference stage.

use crate::corpus::{Conversation, Individual, TENURED_CAREER_LENGTH};
use crate::error::{Error, Result};

pub const DEFAULT_STAGE_WIDTH: usize = 20;

/// Index of the tenured stage: the last complete stage inside the first
/// [`TENURED_CAREER_LENGTH`] conversations (conversations 100..120 at width 20).
pub fn tenured_stage_index(width: usize) -> usize {
    (TENURED_CAREER_LENGTH / width).saturating_sub(1)
}

#[derive(Clone, Copy, Debug)]
pub struct LifeStage<'a> {
    pub individual_id: &'a str,
    pub stage_index: usize,
    pub width: usize,
    pub conversations: &'a [Conversation],
}

impl<'a> LifeStage<'a> {
    pub fn career_range(&self) -> std::ops::Range<usize> {
        self.stage_index * self.width..(self.stage_index + 1) * self.width
    }
}

fn check_width(width: usize) -> Result<()> {
    if width < 2 {
        return Err(Error::Parameter(format!("stage width must be >= 2, got {width}")));
    }
    Ok(())
}

/// Splits a career into `floor(n / width)` complete stages; the remainder is dropped.
pub fn partition(individual: &Individual, width: usize) -> Result<Vec<LifeStage<'_>>> {
    check_width(width)?;
    Ok(individual
        .conversations
        .chunks_exact(width)
        .enumerate()
        .map(|(stage_index, conversations)| LifeStage {
            individual_id: &individual.individual_id,
            stage_index,
            width,
            conversations,
        })
        .collect())
}

/// The stage at `stage_index`, if the career is long enough to complete it.
pub fn stage(individual: &Individual, stage_index: usize, width: usize) -> Result<LifeStage<'_>> {
    check_width(width)?;
    let start = stage_index * width;
    let conversations = individual
        .conversations
        .get(start..start + width)
        .ok_or_else(|| {
            Error::Eligibility(format!(
                "{} has {} conversations, stage {stage_index} needs {}",
                individual.individual_id,
                individual.len(),
                start + width
            ))
        })?;
    Ok(LifeStage {
        individual_id: &individual.individual_id,
        stage_index,
        width,
        conversations,
    })
}

/// The tenured reference stage. Later conversations are never used.
pub fn tenured_stage(individual: &Individual, width: usize) -> Result<LifeStage<'_>> {
    check_width(width)?;
    if individual.len() < TENURED_CAREER_LENGTH {
        return Err(Error::Eligibility(format!(
            "{} has {} conversations, the tenured stage needs {TENURED_CAREER_LENGTH}",
            individual.individual_id,
            individual.len()
        )));
    }
    stage(individual, tenured_stage_index(width), width)
}
