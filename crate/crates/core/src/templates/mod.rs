//! Vignettes, demographic masking and profile rendering.

pub mod lexicon;
pub mod mask;
pub mod profile;
pub mod render;
pub mod template;
pub mod vignette;

pub use lexicon::{GenderLexicon, LexiconError, RelationForms, SlotChoice, SlotKind};
pub use mask::{mask, Field, MaskHit, MaskIssue, MaskReport, Masked};
pub use profile::{Ethnicity, Gender, Profile, SexualOrientation};
pub use render::{render, subject_descriptor, RenderError, RenderedText};
pub use template::{MaskedTemplate, Placeholder, Segment, TemplateError};
pub use vignette::{Vignette, VignetteError};
