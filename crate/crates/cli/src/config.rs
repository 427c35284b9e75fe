//! Typed run configuration from `key=value` pairs. Pairs come from an
//! optional config file followed by command-line flags, so later pairs win.

use std::fmt;
use std::ops::RangeInclusive;
use std::path::PathBuf;

use screenbem::assembly::NitscheParams;
use screenbem::geometry::{build_model_screen, build_unit_square, MeshedScreen};
use screenbem::quadrature::QuadratureOrders;
use screenbem::study::Method;

pub const KEYS: &[&str] = &[
    "method",
    "screen",
    "k",
    "nu",
    "nu0",
    "epsilon",
    "levels",
    "energy-levels",
    "quad-orders",
    "out",
    "dump-mesh",
    "dump-matrix",
    "dump-solution",
    "threads",
];

pub const OUT_ENV: &str = "SCREENBEM_OUT";
pub const DEFAULT_OUT: &str = "screenbem-out";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub key: String,
    pub message: String,
}

impl Violation {
    fn new(key: &str, message: impl Into<String>) -> Self {
        Violation { key: key.to_string(), message: message.into() }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.key, self.message)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScreenKind {
    /// The square as one subdomain.
    Square,
    /// The square split into a half and two quarters with nonmatching meshes.
    Model,
}

impl ScreenKind {
    pub fn build(self, level: u32) -> MeshedScreen {
        match self {
            ScreenKind::Square => build_unit_square(level),
            ScreenKind::Model => build_model_screen(level),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ScreenKind::Square => "square",
            ScreenKind::Model => "model",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Penalty {
    /// One run per listed constant penalty.
    Constant(Vec<f64>),
    /// `nu = nu0 h^-epsilon`, recomputed per level.
    Policy { nu0: f64, epsilon: f64 },
}

impl Penalty {
    pub fn params(&self) -> Vec<NitscheParams> {
        match self {
            Penalty::Constant(nus) => nus.iter().map(|&nu| NitscheParams::Constant { nu }).collect(),
            Penalty::Policy { nu0, epsilon } => vec![NitscheParams::Policy { nu0: *nu0, epsilon: *epsilon }],
        }
    }

    /// File-name labels, one per entry of [`Penalty::params`].
    pub fn labels(&self) -> Vec<String> {
        match self {
            Penalty::Constant(nus) => nus.iter().map(|nu| format!("nu{nu:e}")).collect(),
            Penalty::Policy { nu0, epsilon } => vec![format!("nu0{nu0:e}_eps{epsilon:e}")],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub method: Method,
    pub screen: ScreenKind,
    pub k: f64,
    /// `None` for the conforming method.
    pub penalty: Option<Penalty>,
    pub levels: RangeInclusive<u32>,
    /// Conforming ladder feeding the limit energy.
    pub energy_levels: RangeInclusive<u32>,
    pub orders: QuadratureOrders,
    pub out: PathBuf,
    pub dump_mesh: bool,
    pub dump_matrix: bool,
    pub dump_solution: bool,
    pub threads: Option<usize>,
}

impl RunConfig {
    pub fn method_name(&self) -> &'static str {
        match self.method {
            Method::Conforming => "conforming",
            Method::Nitsche => "nitsche",
        }
    }
}

/// Parses `key = value` lines; blank lines and `#` comments are skipped.
pub fn parse_config_file(text: &str) -> Result<Vec<(String, String)>, Vec<Violation>> {
    let mut out = Vec::new();
    let mut errors = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        match line.split_once('=') {
            Some((k, v)) => out.push((k.trim().to_string(), v.trim().to_string())),
            None => errors.push(Violation::new("config", format!("line {}: expected key=value, got '{line}'", n + 1))),
        }
    }
    if errors.is_empty() {
        Ok(out)
    } else {
        Err(errors)
    }
}

fn parse_f64(key: &str, v: &str, errors: &mut Vec<Violation>) -> Option<f64> {
    match v.parse::<f64>() {
        Ok(x) if x.is_finite() => Some(x),
        _ => {
            errors.push(Violation::new(key, format!("'{v}' is not a finite number")));
            None
        }
    }
}

fn parse_bool(key: &str, v: &str, errors: &mut Vec<Violation>) -> bool {
    match v.to_ascii_lowercase().as_str() {
        "true" | "1" | "yes" | "on" => true,
        "false" | "0" | "no" | "off" => false,
        _ => {
            errors.push(Violation::new(key, format!("'{v}' is not a boolean")));
            false
        }
    }
}

/// `A..B` or `A..=B` (both inclusive), or a single level `A`.
pub fn parse_levels(key: &str, v: &str, errors: &mut Vec<Violation>) -> Option<RangeInclusive<u32>> {
    let parse = |s: &str| s.trim().parse::<u32>().ok();
    let range = match v.split_once("..") {
        Some((a, b)) => parse(a).zip(parse(b.strip_prefix('=').unwrap_or(b))).map(|(a, b)| a..=b),
        None => parse(v).map(|a| a..=a),
    };
    match range {
        None => {
            errors.push(Violation::new(key, format!("'{v}' is not a level range A..B")));
            None
        }
        Some(r) if r.is_empty() => {
            errors.push(Violation::new(key, "levels must be nonempty"));
            None
        }
        Some(r) => Some(r),
    }
}

fn parse_orders(v: &str, errors: &mut Vec<Violation>) -> Option<QuadratureOrders> {
    let q: Vec<Option<usize>> = v.split(',').map(|s| s.trim().parse::<usize>().ok()).collect();
    match q[..] {
        [Some(disjoint), Some(vertex), Some(edge), Some(coincident)] => {
            let orders = QuadratureOrders { disjoint, vertex, edge, coincident };
            match orders.validate() {
                Ok(()) => Some(orders),
                Err(e) => {
                    errors.push(Violation::new("quad-orders", e.to_string()));
                    None
                }
            }
        }
        _ => {
            errors.push(Violation::new("quad-orders", format!("'{v}' is not four orders d,v,e,c")));
            None
        }
    }
}

/// Typed configuration, or every violation found.
pub fn validate_config(raw: &[(String, String)]) -> Result<RunConfig, Vec<Violation>> {
    let mut errors = Vec::new();
    let mut get = std::collections::BTreeMap::new();
    for (k, v) in raw {
        let key = k.trim().replace('_', "-");
        if KEYS.contains(&key.as_str()) {
            get.insert(key, v.trim().to_string());
        } else {
            errors.push(Violation::new(&key, "unknown key"));
        }
    }
    let value = |k: &str| get.get(k).map(String::as_str);

    let method = match value("method") {
        Some("conforming") => Some(Method::Conforming),
        Some("nitsche") => Some(Method::Nitsche),
        Some(m) => {
            errors.push(Violation::new("method", format!("unknown method '{m}' (expected conforming or nitsche)")));
            None
        }
        None => {
            errors.push(Violation::new("method", "method is required"));
            None
        }
    };

    let k = match value("k") {
        Some(v) => parse_f64("k", v, &mut errors),
        None => {
            errors.push(Violation::new("k", "k is required"));
            None
        }
    };
    if let Some(k) = k {
        if k < 0.0 {
            errors.push(Violation::new("k", "k must be ≥ 0"));
        }
    }

    let screen = match value("screen") {
        None => method.map(|m| if m == Method::Conforming { ScreenKind::Square } else { ScreenKind::Model }),
        Some("square") => Some(ScreenKind::Square),
        Some("model") => Some(ScreenKind::Model),
        Some(s) => {
            errors.push(Violation::new("screen", format!("unknown screen '{s}' (expected square or model)")));
            None
        }
    };
    if method == Some(Method::Conforming) && screen == Some(ScreenKind::Model) {
        errors.push(Violation::new("screen", "the conforming method needs matching meshes (screen=square)"));
    }

    let nus = value("nu").map(|v| {
        v.split(',')
            .filter_map(|s| {
                let nu = parse_f64("nu", s.trim(), &mut errors)?;
                if nu <= 0.0 {
                    errors.push(Violation::new("nu", format!("nu must be > 0, got {nu}")));
                }
                Some(nu)
            })
            .collect::<Vec<f64>>()
    });
    let nu0 = value("nu0").and_then(|v| parse_f64("nu0", v, &mut errors));
    let epsilon = value("epsilon").and_then(|v| parse_f64("epsilon", v, &mut errors));
    if nu0.is_some_and(|v| v <= 0.0) {
        errors.push(Violation::new("nu0", "nu0 must be > 0"));
    }
    if epsilon.is_some_and(|v| v < 0.0) {
        errors.push(Violation::new("epsilon", "epsilon must be ≥ 0"));
    }
    if epsilon.is_some() && value("nu0").is_none() {
        errors.push(Violation::new("epsilon", "epsilon needs nu0"));
    }
    let penalty = match (method, nus, nu0) {
        (Some(Method::Nitsche), Some(_), Some(_)) => {
            errors.push(Violation::new("nu", "give either nu or nu0, not both"));
            None
        }
        (Some(Method::Nitsche), Some(nus), None) => {
            if nus.is_empty() {
                errors.push(Violation::new("nu", "nu list is empty"));
            }
            Some(Penalty::Constant(nus))
        }
        (Some(Method::Nitsche), None, Some(nu0)) => Some(Penalty::Policy { nu0, epsilon: epsilon.unwrap_or(0.0) }),
        (Some(Method::Nitsche), None, None) => {
            if value("nu0").is_none() {
                errors.push(Violation::new("nu", "nu is required for the nitsche method"));
            }
            None
        }
        _ => None,
    };

    let levels = match value("levels") {
        Some(v) => parse_levels("levels", v, &mut errors),
        None => {
            errors.push(Violation::new("levels", "levels is required"));
            None
        }
    };
    let energy_levels = match (value("energy-levels"), &levels, method) {
        (Some(v), _, _) => parse_levels("energy-levels", v, &mut errors),
        (None, Some(l), Some(m)) => {
            let (a, b) = (*l.start(), *l.end());
            let b = if m == Method::Nitsche { b + 1 } else { b };
            Some(a..=b.max(a + 2))
        }
        _ => None,
    };
    if let Some(e) = &energy_levels {
        if e.clone().count() < 3 {
            errors.push(Violation::new("energy-levels", "the limit energy needs at least 3 levels"));
        }
    }

    let orders = match value("quad-orders") {
        Some(v) => parse_orders(v, &mut errors),
        None => Some(QuadratureOrders::default()),
    };
    let out = value("out")
        .map(PathBuf::from)
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    let flag = |key: &str, errors: &mut Vec<Violation>| value(key).map(|v| parse_bool(key, v, errors)).unwrap_or(false);
    let (dump_mesh, dump_matrix, dump_solution) =
        (flag("dump-mesh", &mut errors), flag("dump-matrix", &mut errors), flag("dump-solution", &mut errors));
    let threads = value("threads").and_then(|v| match v.parse::<usize>() {
        Ok(n) if n > 0 => Some(n),
        _ => {
            errors.push(Violation::new("threads", format!("'{v}' is not a positive integer")));
            None
        }
    });

    if !errors.is_empty() {
        return Err(errors);
    }
    Ok(RunConfig {
        method: method.unwrap(),
        screen: screen.unwrap(),
        k: k.unwrap(),
        penalty,
        levels: levels.unwrap(),
        energy_levels: energy_levels.unwrap(),
        orders: orders.unwrap(),
        out,
        dump_mesh,
        dump_matrix,
        dump_solution,
        threads,
    })
}

/// A rectangular grid on a coordinate plane.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceSpec {
    /// 0, 1 or 2 for the plane `x`, `y` or `z` = `value`.
    pub axis: usize,
    pub value: f64,
    /// Ranges of the two remaining coordinates, in `x, y, z` order.
    pub extent: [f64; 4],
    pub resolution: [usize; 2],
}

impl SliceSpec {
    /// Grid points, the first in-plane coordinate varying fastest.
    pub fn points(&self) -> Vec<[f64; 3]> {
        let [a0, a1, b0, b1] = self.extent;
        let lin = |lo: f64, hi: f64, n: usize, i: usize| if n == 1 { lo } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 };
        let (u, v) = match self.axis {
            0 => (1, 2),
            1 => (0, 2),
            _ => (0, 1),
        };
        let mut out = Vec::with_capacity(self.resolution[0] * self.resolution[1]);
        for j in 0..self.resolution[1] {
            for i in 0..self.resolution[0] {
                let mut p = [0.0; 3];
                p[self.axis] = self.value;
                p[u] = lin(a0, a1, self.resolution[0], i);
                p[v] = lin(b0, b1, self.resolution[1], j);
                out.push(p);
            }
        }
        out
    }
}

/// `plane` as `z=0.3`, `extent` as `a0,a1,b0,b1`, `resolution` as `n` or `na,nb`.
pub fn validate_slice(plane: &str, extent: &str, resolution: &str) -> Result<SliceSpec, Vec<Violation>> {
    let mut errors = Vec::new();
    let (axis, value) = match plane.split_once('=') {
        Some((a, v)) => {
            let axis = match a.trim() {
                "x" => Some(0),
                "y" => Some(1),
                "z" => Some(2),
                other => {
                    errors.push(Violation::new("plane", format!("unknown axis '{other}'")));
                    None
                }
            };
            (axis, parse_f64("plane", v.trim(), &mut errors))
        }
        None => {
            errors.push(Violation::new("plane", format!("'{plane}' is not of the form axis=value")));
            (None, None)
        }
    };
    let ext: Vec<Option<f64>> = extent.split(',').map(|s| s.trim().parse::<f64>().ok().filter(|v| v.is_finite())).collect();
    let extent = match ext[..] {
        [Some(a), Some(b), Some(c), Some(d)] if a < b && c < d => Some([a, b, c, d]),
        _ => {
            errors.push(Violation::new("extent", format!("'{extent}' is not a0,a1,b0,b1 with a0 < a1, b0 < b1")));
            None
        }
    };
    let res: Vec<Option<usize>> = resolution.split(',').map(|s| s.trim().parse::<usize>().ok().filter(|&n| n > 0)).collect();
    let resolution = match res[..] {
        [Some(n)] => Some([n, n]),
        [Some(a), Some(b)] => Some([a, b]),
        _ => {
            errors.push(Violation::new("resolution", format!("'{resolution}' is not n or na,nb with positive counts")));
            None
        }
    };
    if !errors.is_empty() {
        return Err(errors);
    }
    Ok(SliceSpec { axis: axis.unwrap(), value: value.unwrap(), extent: extent.unwrap(), resolution: resolution.unwrap() })
}
