//! Gaze-driven physical object referencing with voice-command
//! disambiguation.
//!
//! A noisy gaze window becomes a point prompt, the point prompt becomes a
//! mask, the mask is described in a templated sentence, and free-form
//! commands move the selection through a candidate / filter / localize
//! pipeline. Every learned model sits behind [`backend::ModelBackend`];
//! the oracle implementation answers from scene ground truth so the whole
//! pipeline can be checked against synthetic scenes.

pub mod colors;
pub mod gaze;
pub mod geometry;
pub mod scene;
pub mod describer;
pub mod dialog;
pub mod parser;
pub mod backend;
pub mod config;
pub mod disambiguator;
pub mod session;
pub mod sim;
