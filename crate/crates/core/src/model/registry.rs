//! Architecture registry.
//!
//! Keeps room for the segmentation baselines alongside the customized U-Net
//! without hard-wiring their names into checkpoints or configs. Builders
//! take a spec and an init seed and return an untrained model.

use std::collections::BTreeMap;
use std::sync::{Mutex, OnceLock};

use super::{ModelSpec, TrainedModel};
use crate::error::{Error, Result};

pub type BuilderFn = fn(&ModelSpec, u64) -> Result<TrainedModel>;

/// A name -> builder map with first-registration-wins semantics.
#[derive(Default)]
pub struct Registry {
    builders: BTreeMap<String, BuilderFn>,
}

impl Registry {
    /// Empty registry, mainly for tests.
    pub fn new() -> Registry {
        Registry::default()
    }

    /// Registry preloaded with the built-in architectures.
    pub fn with_defaults() -> Registry {
        let mut r = Registry::new();
        r.register(super::unet::ARCH_NAME, super::unet::build)
            .expect("fresh registry");
        r.register(super::bias::ARCH_NAME, super::bias::build)
            .expect("fresh registry");
        r
    }

    pub fn register(&mut self, name: &str, builder: BuilderFn) -> Result<()> {
        if self.builders.contains_key(name) {
            return Err(Error::validation(format!(
                "architecture `{name}` is already registered"
            )));
        }
        self.builders.insert(name.to_string(), builder);
        Ok(())
    }

    pub fn lookup(&self, name: &str) -> Result<BuilderFn> {
        self.builders.get(name).copied().ok_or_else(|| {
            Error::UnknownArchitecture {
                name: name.to_string(),
                available: self.names(),
            }
        })
    }

    pub fn names(&self) -> Vec<String> {
        self.builders.keys().cloned().collect()
    }
}

fn global() -> &'static Mutex<Registry> {
    static REGISTRY: OnceLock<Mutex<Registry>> = OnceLock::new();
    REGISTRY.get_or_init(|| Mutex::new(Registry::with_defaults()))
}

/// Shared process-wide registry, preloaded with the built-ins.
pub fn global_registry() -> &'static Mutex<Registry> {
    global()
}

/// Register into the shared registry.
pub fn register_architecture(name: &str, builder: BuilderFn) -> Result<()> {
    global().lock().expect("registry lock").register(name, builder)
}

/// Look up in the shared registry.
pub fn lookup_architecture(name: &str) -> Result<BuilderFn> {
    global().lock().expect("registry lock").lookup(name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn register_then_lookup_round_trips() {
        let mut r = Registry::new();
        r.register("custom_unet", super::super::unet::build).unwrap();
        let b = r.lookup("custom_unet").unwrap();
        assert_eq!(b as usize, super::super::unet::build as usize);
    }

    #[test]
    fn unknown_lookup_lists_available_names() {
        let mut r = Registry::new();
        r.register("custom_unet", super::super::unet::build).unwrap();
        let err = r.lookup("deeplabv3").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("deeplabv3"), "{msg}");
        assert!(msg.contains("custom_unet"), "{msg}");
    }

    #[test]
    fn duplicate_registration_errors() {
        let mut r = Registry::new();
        r.register("custom_unet", super::super::unet::build).unwrap();
        assert!(r.register("custom_unet", super::super::unet::build).is_err());
    }

    #[test]
    fn global_registry_has_defaults() {
        let names = global_registry().lock().unwrap().names();
        assert!(names.contains(&"custom_unet".to_string()));
        assert!(names.contains(&"global_bias".to_string()));
    }
}
