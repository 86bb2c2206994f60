use super::{DifferentialEvolution, Method, MethodSelection, OptProblem, OptResult, RandomSearch};
use crate::error::{Error, Result};

/// A black-box optimizer over the five elastic limits.
pub trait Optimizer: Send + Sync {
    /// Registry key, e.g. `"de"`.
    fn name(&self) -> &str;

    fn method(&self) -> Method;

    /// Deterministic in `(problem, seed)`.
    fn optimize(&self, problem: &OptProblem, seed: u64) -> Result<OptResult>;
}

/// Optimizers keyed by name, kept in registration order.
#[derive(Default)]
pub struct OptimizerRegistry {
    entries: Vec<Box<dyn Optimizer>>,
}

impl OptimizerRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// `de` and `rs` with default settings.
    pub fn with_defaults() -> Self {
        let mut registry = Self::new();
        registry
            .register(Box::new(DifferentialEvolution::default()))
            .expect("fresh registry");
        registry
            .register(Box::new(RandomSearch::default()))
            .expect("fresh registry");
        registry
    }

    pub fn register(&mut self, optimizer: Box<dyn Optimizer>) -> Result<()> {
        if self.get(optimizer.name()).is_some() {
            return Err(Error::InvalidConfig(format!(
                "optimizer {:?} is already registered",
                optimizer.name()
            )));
        }
        self.entries.push(optimizer);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&dyn Optimizer> {
        self.entries
            .iter()
            .find(|o| o.name() == name)
            .map(|o| o.as_ref())
    }

    pub fn names(&self) -> Vec<&str> {
        self.entries.iter().map(|o| o.name()).collect()
    }

    pub fn resolve(&self, selection: &MethodSelection) -> Result<Vec<&dyn Optimizer>> {
        match selection {
            MethodSelection::All => Ok(self.entries.iter().map(|o| o.as_ref()).collect()),
            MethodSelection::One(name) => self.get(name).map(|o| vec![o]).ok_or_else(|| {
                Error::InvalidConfig(format!(
                    "unknown method {name:?}; registered: {}",
                    self.names().join(", ")
                ))
            }),
        }
    }
}
