//! Seeded random instances, the surrogate setup-cost rule and the bundled
//! CAB-style surrogate dataset.

use super::{Commodity, Instance};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Parameters of [`generate_random`].
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorConfig {
    pub n: usize,
    /// Probability that an ordered pair `(o, d)` becomes a commodity.
    pub density: f64,
    pub seed: u64,
    /// Points are drawn uniformly from `[0, side]^2`.
    pub side: f64,
    /// Demands are drawn uniformly from `[0, demand_max)`.
    pub demand_max: f64,
    /// Setup costs are drawn uniformly from `[0, setup_max)`.
    pub setup_max: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub theta: f64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            n: 6,
            density: 1.0,
            seed: 0,
            side: 100.0,
            demand_max: 10.0,
            setup_max: 3000.0,
            alpha: 0.5,
            gamma: 1.0,
            theta: 1.0,
        }
    }
}

/// Random points in the plane with Euclidean costs, so the triangle inequality
/// holds. The output depends only on `cfg`. At least one commodity is always
/// produced.
pub fn generate_random(cfg: &GeneratorConfig) -> Instance {
    let n = cfg.n.max(2);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let pts: Vec<(f64, f64)> = (0..n)
        .map(|_| (rng.gen::<f64>() * cfg.side, rng.gen::<f64>() * cfg.side))
        .collect();
    let cost: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| (pts[i].0 - pts[j].0).hypot(pts[i].1 - pts[j].1))
                .collect()
        })
        .collect();
    let setup = (0..n).map(|_| rng.gen::<f64>() * cfg.setup_max).collect();
    let mut commodities = Vec::new();
    for o in 0..n {
        for d in 0..n {
            if o == d {
                continue;
            }
            let take = rng.gen::<f64>() < cfg.density;
            let w = rng.gen::<f64>() * cfg.demand_max;
            if take {
                commodities.push(Commodity {
                    origin: o,
                    dest: d,
                    demand: w,
                });
            }
        }
    }
    if commodities.is_empty() {
        commodities.push(Commodity {
            origin: 0,
            dest: n - 1,
            demand: cfg.demand_max.max(1.0) / 2.0,
        });
    }
    Instance::new(cost, setup, commodities, cfg.alpha, cfg.gamma, cfg.theta)
        .expect("generated instance is well formed")
}

/// Surrogate setup costs: `f_i` proportional to the total demand originating at
/// `i`, scaled so the mean equals `mean`. Nodes with no outgoing demand get 0.
/// If there is no demand at all every node gets `mean`.
///
/// This rule is a stand-in; it does not reproduce any published setup-cost data.
pub fn surrogate_setup(inst: &Instance, mean: f64) -> Vec<f64> {
    let n = inst.n();
    let mut out = vec![0.0; n];
    for k in inst.commodities() {
        out[k.origin] += k.demand;
    }
    let total: f64 = out.iter().sum();
    if total <= 0.0 {
        return vec![mean; n];
    }
    let scale = mean * n as f64 / total;
    out.iter_mut().for_each(|f| *f *= scale);
    out
}

/// (name, latitude, longitude, population in millions), approximate values.
const CITIES: [(&str, f64, f64, f64); 25] = [
    ("Atlanta", 33.75, -84.39, 1.6),
    ("Baltimore", 39.29, -76.61, 2.1),
    ("Boston", 42.36, -71.06, 3.4),
    ("Chicago", 41.88, -87.63, 7.0),
    ("Cincinnati", 39.10, -84.51, 1.4),
    ("Cleveland", 41.50, -81.69, 2.1),
    ("Dallas", 32.78, -96.80, 2.4),
    ("Denver", 39.74, -104.99, 1.2),
    ("Detroit", 42.33, -83.05, 4.4),
    ("Houston", 29.76, -95.37, 2.0),
    ("Kansas City", 39.10, -94.58, 1.3),
    ("Los Angeles", 34.05, -118.24, 7.0),
    ("Memphis", 35.15, -90.05, 0.8),
    ("Miami", 25.76, -80.19, 1.3),
    ("Minneapolis", 44.98, -93.27, 1.8),
    ("New Orleans", 29.95, -90.07, 1.0),
    ("New York", 40.71, -74.01, 9.9),
    ("Philadelphia", 39.95, -75.17, 4.8),
    ("Phoenix", 33.45, -112.07, 1.0),
    ("Pittsburgh", 40.44, -80.00, 2.4),
    ("St. Louis", 38.63, -90.20, 2.4),
    ("San Francisco", 37.77, -122.42, 3.1),
    ("Seattle", 47.61, -122.33, 1.4),
    ("Tampa", 27.95, -82.46, 1.1),
    ("Washington", 38.91, -77.04, 2.9),
];

/// Names of the 25 surrogate cities in file order.
pub fn cab_city_names() -> Vec<&'static str> {
    CITIES.iter().map(|c| c.0).collect()
}

/// A CAB-style raw file (node count, flow matrix, cost matrix) for 25 US
/// cities: great-circle distances in miles and gravity flows `P_i P_j`
/// normalized to sum to 1.
///
/// This is a synthetic surrogate with the same shape as the classic CAB data,
/// not the original dataset.
pub fn cab_style_surrogate() -> String {
    let n = CITIES.len();
    let mut flow = vec![vec![0.0; n]; n];
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                flow[i][j] = CITIES[i].3 * CITIES[j].3;
                total += flow[i][j];
            }
        }
    }
    let mut s = format!("{n}\n");
    for row in &flow {
        let line: Vec<String> = row.iter().map(|w| format!("{:.8}", w / total)).collect();
        s.push_str(&line.join(" "));
        s.push('\n');
    }
    for i in 0..n {
        let line: Vec<String> = (0..n)
            .map(|j| format!("{:.2}", great_circle_miles(i, j)))
            .collect();
        s.push_str(&line.join(" "));
        s.push('\n');
    }
    s
}

fn great_circle_miles(i: usize, j: usize) -> f64 {
    if i == j {
        return 0.0;
    }
    const EARTH_RADIUS_MILES: f64 = 3958.8;
    let (la1, lo1) = (CITIES[i].1.to_radians(), CITIES[i].2.to_radians());
    let (la2, lo2) = (CITIES[j].1.to_radians(), CITIES[j].2.to_radians());
    let h = ((la2 - la1) / 2.0).sin().powi(2)
        + la1.cos() * la2.cos() * ((lo2 - lo1) / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_MILES * h.sqrt().asin()
}
