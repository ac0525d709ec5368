use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::arch::{LayerSpec, ModuleType, NetworkSpec, TensorShape};
use crate::zoo::{assemble, ModuleWidths};

use super::ExplorerError;

/// The searchable micro-architecture: stem width and per-module widths on
/// a fixed macro-architecture (`stage_starts`, one-based, first entry 1).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MicroParams {
    pub stem_width: usize,
    pub modules: Vec<ModuleWidths>,
    pub stage_starts: Vec<usize>,
}

fn conv_out(layer: &LayerSpec, what: &str) -> Result<(usize, usize), ExplorerError> {
    layer
        .as_conv()
        .map(|c| (c.out, c.groups))
        .ok_or_else(|| ExplorerError::UnsupportedBase(format!("{what} is not a conv layer")))
}

impl MicroParams {
    /// Extract micro-architecture from a network built on the prototype
    /// skeleton. Stage starts are the Type B module positions.
    pub fn from_network(net: &NetworkSpec) -> Result<Self, ExplorerError> {
        let (stem_width, _) = conv_out(&net.stem.conv, "stem conv")?;
        let mut modules = Vec::with_capacity(net.modules.len());
        let mut stage_starts = Vec::new();
        for (i, m) in net.modules.iter().enumerate() {
            let (compress, _) = conv_out(&m.compress, "compress")?;
            let (group_out, groups) = conv_out(&m.group_conv, "group conv")?;
            let (mix, _) = conv_out(&m.mix, "mix")?;
            let (decompress, _) = conv_out(&m.decompress, "decompress")?;
            if m.module_type == ModuleType::B {
                stage_starts.push(i + 1);
            }
            modules.push(ModuleWidths {
                compress,
                groups,
                group_out,
                mix,
                decompress,
            });
        }
        if stage_starts.first() != Some(&1) {
            return Err(ExplorerError::UnsupportedBase(
                "first module must carry a projection shortcut".into(),
            ));
        }
        let mut micro = Self {
            stem_width,
            modules,
            stage_starts,
        };
        micro.clamp();
        Ok(micro)
    }

    /// Stage index (zero-based) of each module.
    fn stages(&self) -> Vec<usize> {
        (1..=self.modules.len())
            .map(|i| self.stage_starts.iter().filter(|&&s| s <= i).count().saturating_sub(1))
            .collect()
    }

    /// Enforce widths ≥ 1, `groups ≤ min(compress, group_out)`, and one
    /// decompress width per stage (taken from the stage's first module).
    pub fn clamp(&mut self) {
        self.stem_width = self.stem_width.max(1);
        let stages = self.stages();
        let mut stage_width: Vec<Option<usize>> = vec![None; self.stage_starts.len().max(1)];
        for (m, &stage) in self.modules.iter_mut().zip(&stages) {
            m.compress = m.compress.max(1);
            m.group_out = m.group_out.max(1);
            m.mix = m.mix.max(1);
            m.groups = m.groups.clamp(1, m.compress.min(m.group_out));
            let width = *stage_width[stage].get_or_insert(m.decompress.max(1));
            m.decompress = width;
        }
    }

    pub fn materialize(&self, name: &str, input_shape: TensorShape, num_classes: usize) -> NetworkSpec {
        assemble(
            name,
            input_shape,
            num_classes,
            self.stem_width,
            &self.modules,
            &self.stage_starts,
        )
    }
}

/// A seeded sampler of networks around `base`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Generator {
    pub base: MicroParams,
    /// Log-normal sigma applied to every width.
    pub perturbation_scale: f64,
    /// NetScore slack (points) within which fewer parameters win.
    pub complexity_pressure: f64,
    pub input_shape: TensorShape,
    pub num_classes: usize,
}

impl Generator {
    pub fn from_network(
        net: &NetworkSpec,
        perturbation_scale: f64,
        complexity_pressure: f64,
    ) -> Result<Self, ExplorerError> {
        let base = MicroParams::from_network(net)?;
        let num_classes = match &net.head.dense {
            LayerSpec::Dense(d) => d.out,
            _ => return Err(ExplorerError::UnsupportedBase("head has no dense layer".into())),
        };
        Ok(Self {
            base,
            perturbation_scale,
            complexity_pressure,
            input_shape: net.input_shape,
            num_classes,
        })
    }

    /// Perturbed micro-architecture for `seed`.
    pub fn sample(&self, seed: u64) -> MicroParams {
        let mut micro = self.base.clone();
        if self.perturbation_scale <= 0.0 {
            return micro;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sigma = self.perturbation_scale;
        let mut jitter = |w: usize| -> usize {
            let z: f64 = rng.sample(StandardNormal);
            ((w as f64 * (sigma * z).exp()).round() as usize).max(1)
        };
        micro.stem_width = jitter(micro.stem_width);
        for m in micro.modules.iter_mut() {
            m.compress = jitter(m.compress);
            m.groups = jitter(m.groups);
            m.group_out = jitter(m.group_out);
            m.mix = jitter(m.mix);
        }
        let stages = micro.stages();
        for stage in 0..micro.stage_starts.len() {
            let first = stages.iter().position(|&s| s == stage);
            if let Some(first) = first {
                let width = jitter(micro.modules[first].decompress);
                for (m, _) in micro.modules.iter_mut().zip(&stages).filter(|(_, &s)| s == stage) {
                    m.decompress = width;
                }
            }
        }
        micro.clamp();
        micro
    }

    pub fn materialize(&self, micro: &MicroParams, name: &str) -> NetworkSpec {
        micro.materialize(name, self.input_shape, self.num_classes)
    }
}

/// Network for `seed`. Deterministic in `(g, seed)`; always valid. The
/// name is fixed so that equal architectures share a digest.
pub fn generate(g: &Generator, seed: u64) -> NetworkSpec {
    g.materialize(&g.sample(seed), CANDIDATE_NAME)
}

pub const CANDIDATE_NAME: &str = "candidate";
