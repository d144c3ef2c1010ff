use std::fmt::Write as _;

use super::TrainError;
use crate::losses::{Diagonal, LossConfig};

/// Which parts of the objective are switched on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Ablation {
    pub refinement: bool,
    pub confidence: bool,
    pub semantic_consistency: bool,
    pub contrastive: bool,
}

impl Default for Ablation {
    fn default() -> Self {
        Variant::M5.ablation()
    }
}

/// The cumulative ablation ladder, each rung adding one component.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Variant {
    M1,
    M2,
    M3,
    M4,
    M5,
}

impl Variant {
    pub const ALL: [Variant; 5] = [Variant::M1, Variant::M2, Variant::M3, Variant::M4, Variant::M5];

    pub fn ablation(self) -> Ablation {
        let r = self as u8;
        Ablation { refinement: r >= 1, confidence: r >= 2, semantic_consistency: r >= 3, contrastive: r >= 4 }
    }

    pub fn name(self) -> &'static str {
        ["M1", "M2", "M3", "M4", "M5"][self as usize]
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|v| v.name().eq_ignore_ascii_case(s.trim()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Pseudo-graph distance threshold.
    pub t: f64,
    /// Spectral cluster count.
    pub k: usize,
    pub eta: f64,
    pub tau: f64,
    pub learning_rate: f64,
    pub momentum: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub code_len: usize,
    pub hidden: Vec<usize>,
    pub ablation: Ablation,
    pub diagonal: Diagonal,
    /// Stop once the epoch loss has not improved for this many epochs.
    pub early_stop_patience: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            t: 0.1,
            k: 70,
            eta: 0.3,
            tau: 0.5,
            learning_rate: 0.001,
            momentum: 0.9,
            batch_size: 24,
            epochs: 100,
            seed: 0,
            code_len: 16,
            hidden: vec![512],
            ablation: Ablation::default(),
            diagonal: Diagonal::Include,
            early_stop_patience: None,
        }
    }
}

impl TrainConfig {
    pub fn with_variant(&self, v: Variant) -> Self {
        Self { ablation: v.ablation(), ..self.clone() }
    }

    pub fn loss_config(&self) -> LossConfig {
        LossConfig {
            eta: if self.ablation.contrastive { self.eta } else { 0.0 },
            tau: self.tau,
            diagonal: self.diagonal,
            two_view: self.ablation.semantic_consistency,
        }
    }

    /// Checks everything that does not depend on the data.
    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |m: String| Err(TrainError::InvalidConfig(m));
        if !(self.t > 0.0 && self.t < 2.0) {
            return bad(format!("t must lie in (0,2), got {}", self.t));
        }
        if self.k < 2 {
            return bad(format!("k must be >= 2, got {}", self.k));
        }
        if !(self.eta >= 0.0 && self.eta.is_finite()) {
            return bad(format!("eta must be >= 0, got {}", self.eta));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return bad(format!("tau must be > 0, got {}", self.tau));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning_rate must be > 0, got {}", self.learning_rate));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return bad(format!("momentum must lie in [0,1), got {}", self.momentum));
        }
        if self.batch_size < 2 {
            return bad(format!("batch_size must be >= 2, got {}", self.batch_size));
        }
        if self.epochs == 0 {
            return bad("epochs must be >= 1".into());
        }
        if self.code_len == 0 {
            return bad("code_len must be >= 1".into());
        }
        if self.hidden.contains(&0) {
            return bad("hidden widths must be >= 1".into());
        }
        if self.early_stop_patience == Some(0) {
            return bad("early_stop_patience must be >= 1".into());
        }
        Ok(())
    }

    pub fn validate_for(&self, n: usize) -> Result<(), TrainError> {
        self.validate()?;
        if self.k >= n {
            return Err(TrainError::InvalidConfig(format!("k = {} must be below the item count {n}", self.k)));
        }
        if self.batch_size > n {
            return Err(TrainError::InvalidConfig(format!(
                "batch_size = {} exceeds the item count {n}",
                self.batch_size
            )));
        }
        Ok(())
    }

    /// `key=value` lines; [`TrainConfig::from_kv`] reads them back exactly.
    pub fn to_kv(&self) -> String {
        let mut s = String::new();
        let hidden: Vec<String> = self.hidden.iter().map(|h| h.to_string()).collect();
        let _ = writeln!(s, "t={}", self.t);
        let _ = writeln!(s, "k={}", self.k);
        let _ = writeln!(s, "eta={}", self.eta);
        let _ = writeln!(s, "tau={}", self.tau);
        let _ = writeln!(s, "learning_rate={}", self.learning_rate);
        let _ = writeln!(s, "momentum={}", self.momentum);
        let _ = writeln!(s, "batch_size={}", self.batch_size);
        let _ = writeln!(s, "epochs={}", self.epochs);
        let _ = writeln!(s, "seed={}", self.seed);
        let _ = writeln!(s, "code_len={}", self.code_len);
        let _ = writeln!(s, "hidden={}", hidden.join(","));
        let _ = writeln!(s, "refinement={}", self.ablation.refinement);
        let _ = writeln!(s, "confidence={}", self.ablation.confidence);
        let _ = writeln!(s, "semantic_consistency={}", self.ablation.semantic_consistency);
        let _ = writeln!(s, "contrastive={}", self.ablation.contrastive);
        let _ = writeln!(
            s,
            "diagonal={}",
            match self.diagonal {
                Diagonal::Include => "include",
                Diagonal::Exclude => "exclude",
            }
        );
        let _ = writeln!(
            s,
            "early_stop_patience={}",
            self.early_stop_patience.map_or_else(|| "none".to_string(), |p| p.to_string())
        );
        s
    }

    /// Parses `key=value` lines over the defaults. Blank lines and `#`
    /// comments are skipped; `variant=M3` sets all four ablation switches.
    pub fn from_kv(text: &str) -> Result<Self, TrainError> {
        let mut cfg = Self::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| TrainError::InvalidConfig(format!("line {}: expected key=value", lineno + 1)))?;
            cfg.set(key.trim(), value.trim())
                .map_err(|m| TrainError::InvalidConfig(format!("line {}: {m}", lineno + 1)))?;
        }
        Ok(cfg)
    }

    /// Sets one field from its textual form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, String> {
            v.parse().map_err(|_| format!("{key}: cannot parse {v:?}"))
        }
        match key {
            "t" => self.t = num(key, value)?,
            "k" => self.k = num(key, value)?,
            "eta" => self.eta = num(key, value)?,
            "tau" => self.tau = num(key, value)?,
            "learning_rate" | "lr" => self.learning_rate = num(key, value)?,
            "momentum" => self.momentum = num(key, value)?,
            "batch_size" => self.batch_size = num(key, value)?,
            "epochs" => self.epochs = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "code_len" => self.code_len = num(key, value)?,
            "hidden" => {
                self.hidden = if value.is_empty() {
                    Vec::new()
                } else {
                    value.split(',').map(|h| num(key, h.trim())).collect::<Result<_, _>>()?
                }
            }
            "refinement" => self.ablation.refinement = num(key, value)?,
            "confidence" => self.ablation.confidence = num(key, value)?,
            "semantic_consistency" => self.ablation.semantic_consistency = num(key, value)?,
            "contrastive" => self.ablation.contrastive = num(key, value)?,
            "variant" => {
                self.ablation = Variant::parse(value).ok_or_else(|| format!("unknown variant {value:?}"))?.ablation()
            }
            "diagonal" => {
                self.diagonal = match value {
                    "include" => Diagonal::Include,
                    "exclude" => Diagonal::Exclude,
                    _ => return Err(format!("diagonal must be include or exclude, got {value:?}")),
                }
            }
            "early_stop_patience" => {
                self.early_stop_patience = if value == "none" { None } else { Some(num(key, value)?) }
            }
            _ => return Err(format!("unknown key {key:?}")),
        }
        Ok(())
    }
}
