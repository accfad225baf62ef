//! Optional TOML configuration: verification budgets and field polynomials.
//!
//! ```toml
//! [budget]
//! max_work = 5000000000
//! max_bitmap_mib = 512
//! heavy_work = 1000000000
//!
//! [sample]
//! trials = 1000000
//! seed = 1
//!
//! [field.polys]
//! 4 = 0x13
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use qmcover::verify::Budget;
use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BudgetConfig {
    pub max_work: u64,
    pub max_bitmap_mib: u64,
    /// Estimated work above which `--heavy` is required.
    pub heavy_work: u64,
    /// Bitmap size above which `--heavy` is required.
    pub heavy_bitmap_mib: u64,
}

impl Default for BudgetConfig {
    fn default() -> Self {
        let b = Budget::default();
        Self { max_work: b.max_work, max_bitmap_mib: b.max_bitmap_bytes >> 20, heavy_work: 1_000_000_000, heavy_bitmap_mib: 64 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SampleConfig {
    pub trials: u64,
    pub seed: u64,
}

impl Default for SampleConfig {
    fn default() -> Self {
        Self { trials: 1_000_000, seed: 1 }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FieldConfig {
    /// Reduction polynomial per extension degree `m`.
    pub polys: BTreeMap<String, u32>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub budget: BudgetConfig,
    pub sample: SampleConfig,
    pub field: FieldConfig,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)?;
        let cfg: Config = toml::from_str(&text).map_err(|e| CliError::Config(e.to_string()))?;
        for (m, &p) in &cfg.field.polys {
            let m: u32 = m.parse().map_err(|_| CliError::Config(format!("field.polys key {m} is not a degree")))?;
            if !qmcover::gf2m::is_irreducible(p, m) {
                return Err(CliError::Config(format!("{p:#x} is not irreducible of degree {m}")));
            }
        }
        Ok(cfg)
    }

    pub fn budget(&self, heavy: bool) -> Budget {
        let mut b = Budget { max_work: self.budget.max_work, max_bitmap_bytes: self.budget.max_bitmap_mib << 20 };
        if heavy {
            b.max_work = u64::MAX;
            b.max_bitmap_bytes = b.max_bitmap_bytes.max(1 << 30);
        }
        b
    }

    pub fn poly_for(&self, m: u32) -> Option<u32> {
        self.field.polys.get(&m.to_string()).copied()
    }
}
