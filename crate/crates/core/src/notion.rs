//! Depth notions behind one trait, registered by name.
//!
//! The experiment harness and the CLI never call a depth function directly;
//! they look a notion up in a [`NotionRegistry`] and hand it a
//! [`NotionRequest`]. Regularized notions return one output per quantile
//! level, the others return a single output.

use std::collections::BTreeMap;

use crate::comparators::profiles_batch;
use crate::depth::rpd_batch_multi;
use crate::directions::{filter_pool, tune_beta, DirectionPool, RegularizedPool};
use crate::error::{Error, Result};
use crate::functional::FunctionalSample;

pub struct NotionRequest<'a> {
    pub reference: &'a FunctionalSample,
    pub queries: &'a FunctionalSample,
    /// Quantile levels `u` used to tune `beta`.
    pub levels: &'a [f64],
    /// Number of random directions `M`.
    pub directions: usize,
    pub seed: u64,
    /// Fixed `beta` instead of tuning; yields a single output.
    pub beta_override: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NotionOutput {
    pub level: Option<f64>,
    pub beta: Option<f64>,
    pub depths: Vec<f64>,
    pub worst_direction: Option<Vec<usize>>,
}

pub trait DepthNotion: Send + Sync {
    fn name(&self) -> &'static str;

    fn description(&self) -> &'static str;

    /// Whether outputs depend on the quantile level.
    fn regularized(&self) -> bool {
        false
    }

    fn implemented(&self) -> bool {
        true
    }

    fn evaluate(&self, request: &NotionRequest<'_>) -> Result<Vec<NotionOutput>>;
}

#[derive(Debug, Default, Clone, Copy)]
pub struct Rpd;

impl DepthNotion for Rpd {
    fn name(&self) -> &'static str {
        "rpd"
    }

    fn description(&self) -> &'static str {
        "regularized projection depth over random directions"
    }

    fn regularized(&self) -> bool {
        true
    }

    fn evaluate(&self, req: &NotionRequest<'_>) -> Result<Vec<NotionOutput>> {
        let pool = DirectionPool::build(req.reference, req.directions, req.seed)?;
        let settings: Vec<(Option<f64>, f64)> = match req.beta_override {
            Some(beta) => vec![(None, beta)],
            None => req
                .levels
                .iter()
                .map(|&u| Ok((Some(u), tune_beta(&pool, u)?)))
                .collect::<Result<_>>()?,
        };
        let regs: Vec<RegularizedPool<'_>> = settings
            .iter()
            .map(|&(_, beta)| filter_pool(&pool, beta))
            .collect::<Result<_>>()?;
        let results = rpd_batch_multi(req.queries, &regs)?;
        Ok(settings
            .into_iter()
            .zip(results)
            .map(|((level, beta), depths)| NotionOutput {
                level,
                beta: Some(beta),
                worst_direction: Some(depths.iter().map(|d| d.worst_direction).collect()),
                depths: depths.into_iter().map(|d| d.value).collect(),
            })
            .collect())
    }
}

#[derive(Debug, Default, Clone, Copy)]
pub struct IntegratedDepth;

impl DepthNotion for IntegratedDepth {
    fn name(&self) -> &'static str {
        "fd"
    }

    fn description(&self) -> &'static str {
        "integrated univariate halfspace depth (grid mean)"
    }

    fn evaluate(&self, req: &NotionRequest<'_>) -> Result<Vec<NotionOutput>> {
        let depths = profiles_batch(req.queries, req.reference)?
            .iter()
            .map(|p| p.integrated())
            .collect();
        Ok(vec![NotionOutput {
            level: None,
            beta: None,
            depths,
            worst_direction: None,
        }])
    }
}

#[derive(Debug, Default, Clone, Copy)]
pub struct InfimalDepth;

impl DepthNotion for InfimalDepth {
    fn name(&self) -> &'static str {
        "id"
    }

    fn description(&self) -> &'static str {
        "infimal univariate halfspace depth (grid minimum)"
    }

    fn evaluate(&self, req: &NotionRequest<'_>) -> Result<Vec<NotionOutput>> {
        let depths = profiles_batch(req.queries, req.reference)?
            .iter()
            .map(|p| p.infimal())
            .collect();
        Ok(vec![NotionOutput {
            level: None,
            beta: None,
            depths,
            worst_direction: None,
        }])
    }
}

/// Named slot for a notion this crate does not compute.
#[derive(Debug, Clone, Copy)]
pub struct Unimplemented {
    name: &'static str,
    description: &'static str,
}

impl DepthNotion for Unimplemented {
    fn name(&self) -> &'static str {
        self.name
    }

    fn description(&self) -> &'static str {
        self.description
    }

    fn regularized(&self) -> bool {
        true
    }

    fn implemented(&self) -> bool {
        false
    }

    fn evaluate(&self, _: &NotionRequest<'_>) -> Result<Vec<NotionOutput>> {
        Err(Error::Unimplemented(self.name.to_string()))
    }
}

pub struct NotionRegistry {
    entries: BTreeMap<&'static str, Box<dyn DepthNotion>>,
}

impl NotionRegistry {
    pub fn empty() -> Self {
        NotionRegistry {
            entries: BTreeMap::new(),
        }
    }

    /// `rpd`, `fd`, `id`, plus the unimplemented `rhd` and `rhd6` slots.
    pub fn builtin() -> Self {
        let mut reg = Self::empty();
        reg.register(Box::new(Rpd));
        reg.register(Box::new(IntegratedDepth));
        reg.register(Box::new(InfimalDepth));
        reg.register(Box::new(Unimplemented {
            name: "rhd",
            description: "regularized halfspace depth, data-driven dimension (not implemented)",
        }));
        reg.register(Box::new(Unimplemented {
            name: "rhd6",
            description: "regularized halfspace depth, dimension 6 (not implemented)",
        }));
        reg
    }

    /// Adds or replaces a notion under its own name.
    pub fn register(&mut self, notion: Box<dyn DepthNotion>) {
        self.entries.insert(notion.name(), notion);
    }

    pub fn get(&self, name: &str) -> Result<&dyn DepthNotion> {
        self.entries
            .get(name.to_ascii_lowercase().as_str())
            .map(|b| b.as_ref())
            .ok_or_else(|| Error::UnknownNotion(name.to_string()))
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.entries.keys().copied()
    }
}

impl Default for NotionRegistry {
    fn default() -> Self {
        Self::builtin()
    }
}
