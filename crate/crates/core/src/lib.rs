//! Core of a desk-scale driving-scene editing simulator.
//!
//! Natural-language edits are parsed into structured configs, dispatched to
//! editing agents and applied to a [`scene::SceneState`]; frames come from an
//! analytic radiance field composited with shaded vehicle boxes. Everything
//! here is `no_std` + `alloc`; IO, HTTP and the CLI live in the `drivesim`
//! crate.

#![no_std]
// `Float` supplies the math methods under no_std; with std linked in test builds
// the inherent methods shadow it.
#![allow(unused_imports)]

extern crate alloc;

pub mod assets;
pub mod camera;
pub mod compositor;
pub mod demo;
pub mod dsl;
pub mod export;
pub mod image;
pub mod lighting;
pub mod math;
pub mod motion;
pub mod orchestrator;
pub mod photometry;
pub mod render;
pub mod scene;
pub mod skydome;
