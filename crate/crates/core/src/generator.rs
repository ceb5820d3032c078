//! Seeded instance generation for the felt-plant scenario grid.
//!
//! Randomness comes from `ChaCha8Rng` seeded with `seed_from_u64`, and
//! integers are drawn with `rand` 0.8's `gen_range`. Both are value-stable
//! across platforms, so a seed identifies a demand matrix everywhere.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Instance;

pub const VAO_COST: [f64; 3] = [2400.0, 5400.0, 1000.0];
pub const TRANSPORT_COST: [f64; 4] = [100.0, 120.0, 120.0, 140.0];
pub const END_HOLD_COST: [f64; 4] = [300.0, 150.0, 300.0, 150.0];
pub const WIP_HOLD_COST: [f64; 4] = [0.0, 50.0, 0.0, 50.0];
pub const ENERGY_RATE: [f64; 3] = [1.16, 3.09, 0.0];
pub const PROC_TIME_BOUNDS: [(f64, f64); 3] = [(50.0, 80.0), (22.2, 26.6), (80.0, 80.0)];
pub const UNIT_LENGTH_M: f64 = 400.0;
pub const PRODUCT_SHARES: [f64; 4] = [0.16, 0.04, 0.64, 0.16];

/// Product-machine incidence: cylinders (PL1), plaques (PL1, cut),
/// chemical cylinders (PL1, PL2), chemical plaques (PL1, PL2, cut).
pub const ROUTE: [[u8; 3]; 4] = [[1, 0, 0], [1, 0, 1], [1, 1, 0], [1, 1, 1]];

pub fn plant_sequences() -> Vec<Vec<usize>> {
    vec![vec![0], vec![0, 2], vec![0, 1], vec![0, 1, 2]]
}

/// Plant data with the given horizon, per-period capacity, storage caps and
/// demand matrix.
pub fn plant_instance(
    num_periods: usize,
    capacity: f64,
    end_inv_cap: f64,
    wip_inv_cap: f64,
    demand: Vec<Vec<f64>>,
) -> Instance {
    Instance {
        num_products: 4,
        num_machines: 3,
        num_periods,
        route: ROUTE.iter().map(|r| r.to_vec()).collect(),
        sequence: plant_sequences(),
        vao_cost: VAO_COST.to_vec(),
        transport_cost: TRANSPORT_COST.to_vec(),
        end_hold_cost: END_HOLD_COST.to_vec(),
        wip_hold_cost: WIP_HOLD_COST.to_vec(),
        energy_rate: ENERGY_RATE.to_vec(),
        proc_time_bounds: PROC_TIME_BOUNDS.to_vec(),
        demand,
        capacity: vec![capacity; num_periods],
        end_inv_cap,
        wip_inv_cap,
        unit_length: UNIT_LENGTH_M,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Horizon {
    T10,
    T20,
    T30,
}

impl Horizon {
    pub const ALL: [Horizon; 3] = [Horizon::T10, Horizon::T20, Horizon::T30];

    pub fn periods(self) -> usize {
        match self {
            Horizon::T10 => 10,
            Horizon::T20 => 20,
            Horizon::T30 => 30,
        }
    }

    /// Inclusive bounds on total demand over the horizon.
    pub fn demand_bounds(self) -> (u64, u64) {
        match self {
            Horizon::T10 => (80, 120),
            Horizon::T20 => (180, 250),
            Horizon::T30 => (290, 350),
        }
    }

    fn index(self) -> u64 {
        self as u64
    }
}

impl fmt::Display for Horizon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.periods())
    }
}

impl FromStr for Horizon {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim_start_matches(['T', 't']) {
            "10" => Ok(Horizon::T10),
            "20" => Ok(Horizon::T20),
            "30" => Ok(Horizon::T30),
            _ => Err(Error::input(format!(
                "unknown horizon {s:?}; expected 10, 20 or 30"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Level {
    Low,
    Med,
    High,
}

impl Level {
    pub const ALL: [Level; 3] = [Level::Low, Level::Med, Level::High];

    /// Minutes available per period.
    pub fn capacity(self) -> f64 {
        match self {
            Level::Low => 630.0,
            Level::Med => 720.0,
            Level::High => 810.0,
        }
    }

    /// `(s_max, u_max)` storage caps.
    pub fn inventory_caps(self) -> (f64, f64) {
        match self {
            Level::Low => (6.0, 3.0),
            Level::Med => (12.0, 6.0),
            Level::High => (18.0, 9.0),
        }
    }

    fn index(self) -> u64 {
        self as u64
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Level::Low => "low",
            Level::Med => "med",
            Level::High => "high",
        })
    }
}

impl FromStr for Level {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "low" => Ok(Level::Low),
            "med" | "medium" => Ok(Level::Med),
            "high" => Ok(Level::High),
            _ => Err(Error::input(format!(
                "unknown level {s:?}; expected low, med or high"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub horizon: Horizon,
    pub capacity_level: Level,
    pub inventory_level: Level,
    /// Replicate number within the grid cell; informational.
    pub replicate: usize,
    pub seed: u64,
    pub product_shares: Vec<f64>,
    /// Inclusive total-demand range; defaults to the horizon's range.
    pub demand_bounds: (u64, u64),
}

impl GeneratorConfig {
    pub fn new(horizon: Horizon, capacity_level: Level, inventory_level: Level, seed: u64) -> Self {
        GeneratorConfig {
            horizon,
            capacity_level,
            inventory_level,
            replicate: 0,
            seed,
            product_shares: PRODUCT_SHARES.to_vec(),
            demand_bounds: horizon.demand_bounds(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.product_shares.len() != 4 || self.product_shares.iter().any(|&s| !(s >= 0.0)) {
            return Err(Error::input(
                "product_shares needs four nonnegative entries",
            ));
        }
        let total: f64 = self.product_shares.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::input(format!(
                "product shares sum to {total}, not 1"
            )));
        }
        if self.demand_bounds.0 > self.demand_bounds.1 {
            return Err(Error::input("demand bounds are reversed"));
        }
        Ok(())
    }
}

/// Split `total` into integer parts proportional to `shares`, handing the
/// leftover units to the largest fractional remainders (lower index first on
/// ties). Parts always sum to `total`.
pub fn largest_remainder(total: u64, shares: &[f64]) -> Vec<u64> {
    let exact: Vec<f64> = shares.iter().map(|s| s * total as f64).collect();
    // Guard against 0.64 * 100 = 64.00000000000001 style noise.
    let mut parts: Vec<u64> = exact.iter().map(|&e| (e + 1e-9).floor() as u64).collect();
    let assigned: u64 = parts.iter().sum();
    let mut order: Vec<usize> = (0..shares.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = exact[a] - parts[a] as f64;
        let fb = exact[b] - parts[b] as f64;
        fb.partial_cmp(&fa).unwrap().then(a.cmp(&b))
    });
    for &k in order
        .iter()
        .cycle()
        .take(total.saturating_sub(assigned) as usize)
    {
        parts[k] += 1;
    }
    parts
}

/// Demand matrix `d[i][t]`: draw the horizon total uniformly, split it by
/// product share, then drop each unit into a uniformly chosen period.
pub fn generate_demand(config: &GeneratorConfig) -> Vec<Vec<f64>> {
    draw_demand(
        config.seed,
        config.horizon.periods(),
        config.demand_bounds,
        &config.product_shares,
    )
}

/// [`generate_demand`] for an arbitrary horizon length.
pub fn draw_demand(seed: u64, nt: usize, bounds: (u64, u64), shares: &[f64]) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total = rng.gen_range(bounds.0..=bounds.1);
    let per_product = largest_remainder(total, shares);
    per_product
        .iter()
        .map(|&units| {
            let mut row = vec![0.0; nt];
            for _ in 0..units {
                row[rng.gen_range(0..nt)] += 1.0;
            }
            row
        })
        .collect()
}

pub fn build_instance(config: &GeneratorConfig) -> Result<Instance> {
    config.validate()?;
    let (s_max, u_max) = config.inventory_level.inventory_caps();
    let inst = plant_instance(
        config.horizon.periods(),
        config.capacity_level.capacity(),
        s_max,
        u_max,
        generate_demand(config),
    );
    inst.validate()?;
    Ok(inst)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Options for laying out the scenario grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridOptions {
    pub seeds_per_cell: usize,
    pub base_seed: u64,
    /// Reuse one demand draw per (horizon, replicate) across all nine
    /// capacity and inventory cells.
    pub share_demand: bool,
}

impl GridOptions {
    pub fn new(seeds_per_cell: usize) -> Self {
        GridOptions {
            seeds_per_cell,
            base_seed: 0,
            share_demand: true,
        }
    }
}

/// Seed for a grid run, derived with splitmix64 from the base seed and the
/// run's coordinates.
pub fn grid_seed(opts: &GridOptions, h: Horizon, cap: Level, inv: Level, replicate: usize) -> u64 {
    let mut z = splitmix64(opts.base_seed ^ 0x4C53_4D53);
    z = splitmix64(z ^ h.index());
    if !opts.share_demand {
        z = splitmix64(z ^ (cap.index() << 8 | inv.index()));
    }
    splitmix64(z ^ replicate as u64)
}

/// Full horizon x capacity x inventory x replicate lattice, in that nesting
/// order.
pub fn enumerate_grid(opts: &GridOptions) -> Result<Vec<GeneratorConfig>> {
    if opts.seeds_per_cell == 0 {
        return Err(Error::input("seeds_per_cell must be at least 1"));
    }
    let mut out = Vec::with_capacity(27 * opts.seeds_per_cell);
    for h in Horizon::ALL {
        for cap in Level::ALL {
            for inv in Level::ALL {
                for rep in 0..opts.seeds_per_cell {
                    let mut cfg =
                        GeneratorConfig::new(h, cap, inv, grid_seed(opts, h, cap, inv, rep));
                    cfg.replicate = rep;
                    out.push(cfg);
                }
            }
        }
    }
    Ok(out)
}

/// CSV listing of grid coordinates and seeds.
pub fn write_grid_csv<W: Write>(configs: &[GeneratorConfig], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "T",
        "m_t",
        "capacity_level",
        "inventory_level",
        "s_max",
        "u_max",
        "replicate",
        "seed",
    ])?;
    for c in configs {
        let (s, u) = c.inventory_level.inventory_caps();
        w.write_record([
            c.horizon.to_string(),
            c.capacity_level.capacity().to_string(),
            c.capacity_level.to_string(),
            c.inventory_level.to_string(),
            s.to_string(),
            u.to_string(),
            c.replicate.to_string(),
            c.seed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
