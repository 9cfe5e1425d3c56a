//! Analytical cost estimator for the setup and per-email phases of the
//! non-private, baseline (Paillier, within-row) and Pretzel (lattice,
//! across-row, candidate pruning) configurations.
//!
//! All arithmetic is exact over `Ratio<i128>`. Constants are read from
//! `key = value` lines; values are integers, decimals (`0.125`) or
//! fractions (`3/8`).

use std::collections::BTreeMap;
use std::fmt;

use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};

pub type Q = Ratio<i128>;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CostError {
    #[error("missing constant {0}")]
    Missing(&'static str),
    #[error("invalid value for {key}: {value:?}")]
    Value { key: String, value: String },
    #[error("unknown constant {0}")]
    Unknown(String),
    #[error("{0} must be positive")]
    NotPositive(&'static str),
    #[error("line {0}: expected key = value")]
    Syntax(usize),
}

/// Per-backend micro costs: encryption, decryption, homomorphic addition
/// time and ciphertext size.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AheCosts {
    pub e: Option<Q>,
    pub d: Option<Q>,
    pub a: Option<Q>,
    pub c: Option<Q>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CostModel {
    pub n: Option<u64>,
    /// Features kept after aggressive selection; defaults to `n`.
    pub n_prime: Option<u64>,
    pub b: Option<u64>,
    pub b_prime: Option<u64>,
    pub l: Option<u64>,
    pub p_pail: Option<u64>,
    pub p_xpir: Option<u64>,
    pub pail: AheCosts,
    pub xpir: AheCosts,
    /// Feature extraction and lookup time.
    pub h: Option<Q>,
    /// Time to add two plaintext probabilities.
    pub s: Option<Q>,
    /// Left-shift (rotation) time in the lattice scheme.
    pub s_shift: Option<Q>,
    pub y_per_in: Option<Q>,
    pub sz_per_in: Option<Q>,
    pub sz_email: Option<Q>,
    pub k_cpu: Q,
    pub k_net: Q,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum System {
    NonPrivate,
    Baseline,
    Pretzel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Task {
    Spam,
    Topics,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Phase {
    Setup,
    PerEmail,
}

impl System {
    pub const ALL: [System; 3] = [System::NonPrivate, System::Baseline, System::Pretzel];

    pub fn name(self) -> &'static str {
        match self {
            System::NonPrivate => "nonprivate",
            System::Baseline => "baseline",
            System::Pretzel => "pretzel",
        }
    }
}

impl Task {
    pub const ALL: [Task; 2] = [Task::Spam, Task::Topics];

    pub fn name(self) -> &'static str {
        match self {
            Task::Spam => "spam",
            Task::Topics => "topics",
        }
    }
}

impl Phase {
    pub const ALL: [Phase; 2] = [Phase::Setup, Phase::PerEmail];

    pub fn name(self) -> &'static str {
        match self {
            Phase::Setup => "setup",
            Phase::PerEmail => "per_email",
        }
    }
}

/// One cell group; `None` marks a cost that does not apply.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CostRow {
    pub provider_cpu: Option<Q>,
    pub client_cpu: Option<Q>,
    pub network: Option<Q>,
    pub client_storage: Option<Q>,
}

impl CostRow {
    pub fn metrics(&self) -> [(&'static str, Option<Q>); 4] {
        [
            ("provider_cpu", self.provider_cpu),
            ("client_cpu", self.client_cpu),
            ("network", self.network),
            ("client_storage", self.client_storage),
        ]
    }
}

fn req<T: Copy>(v: Option<T>, name: &'static str) -> Result<T, CostError> {
    v.ok_or(CostError::Missing(name))
}

fn int(v: u64) -> Q {
    Q::from_integer(v as i128)
}

fn ceil_div(a: u64, b: u64) -> u64 {
    a.div_ceil(b)
}

fn positive(v: Option<u64>, name: &'static str) -> Result<u64, CostError> {
    match req(v, name)? {
        0 => Err(CostError::NotPositive(name)),
        x => Ok(x),
    }
}

impl CostModel {
    pub fn k(&self) -> Result<u64, CostError> {
        Ok(req(self.b, "B")? % positive(self.p_xpir, "p_xpir")?)
    }

    pub fn beta_pail(&self) -> Result<Q, CostError> {
        Ok(int(ceil_div(
            req(self.b, "B")?,
            positive(self.p_pail, "p_pail")?,
        )))
    }

    pub fn beta_xpir(&self) -> Result<Q, CostError> {
        Ok(int(ceil_div(
            req(self.b, "B")?,
            positive(self.p_xpir, "p_xpir")?,
        )))
    }

    /// `floor(B/p) + 1/floor(p/k)` with `k = B mod p`; equals `beta_xpir`
    /// when `k = 0`.
    pub fn beta_prime_xpir(&self) -> Result<Q, CostError> {
        let b = req(self.b, "B")?;
        let p = positive(self.p_xpir, "p_xpir")?;
        let k = b % p;
        if k == 0 {
            return self.beta_xpir();
        }
        Ok(int(b / p) + Q::new(1, (p / k) as i128))
    }

    pub fn beta_dprime_xpir(&self, task: Task) -> Result<Q, CostError> {
        match task {
            Task::Spam => self.beta_xpir(),
            Task::Topics => Ok(int(req(self.b_prime, "B_prime")?)),
        }
    }

    pub fn b_dprime(&self, task: Task) -> Result<Q, CostError> {
        match task {
            Task::Spam => Ok(int(req(self.b, "B")?)),
            Task::Topics => Ok(int(req(self.b_prime, "B_prime")?)),
        }
    }

    fn n_prime(&self) -> Result<u64, CostError> {
        self.n_prime.or(self.n).ok_or(CostError::Missing("N_prime"))
    }
}

pub fn estimate_costs(
    cm: &CostModel,
    system: System,
    task: Task,
    phase: Phase,
) -> Result<CostRow, CostError> {
    let pail = &cm.pail;
    let xpir = &cm.xpir;
    Ok(match (system, phase) {
        (System::NonPrivate, Phase::Setup) => CostRow::default(),
        (System::NonPrivate, Phase::PerEmail) => {
            let l = int(req(cm.l, "L")?);
            let b = int(req(cm.b, "B")?);
            CostRow {
                provider_cpu: Some(l * req(cm.h, "h")? + l * b * req(cm.s, "s")?),
                client_cpu: None,
                network: Some(req(cm.sz_email, "sz_email")?),
                client_storage: None,
            }
        }
        (System::Baseline, Phase::Setup) => {
            let nb = int(req(cm.n, "N")?) * cm.beta_pail()?;
            let c = req(pail.c, "c_pail")?;
            CostRow {
                provider_cpu: Some(nb * req(pail.e, "e_pail")? + cm.k_cpu),
                client_cpu: Some(cm.k_cpu),
                network: Some(nb * c + cm.k_net),
                client_storage: Some(nb * c),
            }
        }
        (System::Pretzel, Phase::Setup) => {
            let nb = int(cm.n_prime()?) * cm.beta_prime_xpir()?;
            let c = req(xpir.c, "c_xpir")?;
            CostRow {
                provider_cpu: Some(nb * req(xpir.e, "e_xpir")? + cm.k_cpu),
                client_cpu: Some(cm.k_cpu),
                network: Some(nb * c + cm.k_net),
                client_storage: Some(nb * c),
            }
        }
        (System::Baseline, Phase::PerEmail) => {
            let beta = cm.beta_pail()?;
            let l = int(req(cm.l, "L")?);
            let b = int(req(cm.b, "B")?);
            let y = req(cm.y_per_in, "y_per_in")?;
            CostRow {
                provider_cpu: Some(beta * req(pail.d, "d_pail")? + b * y),
                client_cpu: Some(
                    l * beta * req(pail.a, "a_pail")? + beta * req(pail.e, "e_pail")? + b * y,
                ),
                network: Some(
                    req(cm.sz_email, "sz_email")?
                        + beta * req(pail.c, "c_pail")?
                        + b * req(cm.sz_per_in, "sz_per_in")?,
                ),
                client_storage: None,
            }
        }
        (System::Pretzel, Phase::PerEmail) => {
            let beta = cm.beta_xpir()?;
            let beta2 = cm.beta_dprime_xpir(task)?;
            let b2 = cm.b_dprime(task)?;
            let l = int(req(cm.l, "L")?);
            // Spam sessions extract no candidate slots, so no B' shifts.
            let shifts = match task {
                Task::Spam => l,
                Task::Topics => l + int(req(cm.b_prime, "B_prime")?),
            };
            let y = req(cm.y_per_in, "y_per_in")?;
            CostRow {
                provider_cpu: Some(beta2 * req(xpir.d, "d_xpir")? + b2 * y),
                client_cpu: Some(
                    l * beta * req(xpir.a, "a_xpir")?
                        + shifts * req(cm.s_shift, "s_shift")?
                        + beta2 * req(xpir.e, "e_xpir")?
                        + b2 * y,
                ),
                network: Some(
                    req(cm.sz_email, "sz_email")?
                        + beta2 * req(xpir.c, "c_xpir")?
                        + b2 * req(cm.sz_per_in, "sz_per_in")?,
                ),
                client_storage: None,
            }
        }
    })
}

/// One evaluated cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CostCell {
    pub system: System,
    pub task: Task,
    pub phase: Phase,
    pub metric: &'static str,
    pub value: Option<Q>,
}

/// Every cell of the table. Scenarios whose constants are missing are
/// reported as errors.
pub fn estimate_all(cm: &CostModel) -> Result<Vec<CostCell>, CostError> {
    let mut out = Vec::new();
    for task in Task::ALL {
        for phase in Phase::ALL {
            for system in System::ALL {
                let row = estimate_costs(cm, system, task, phase)?;
                for (metric, value) in row.metrics() {
                    out.push(CostCell {
                        system,
                        task,
                        phase,
                        metric,
                        value,
                    });
                }
            }
        }
    }
    Ok(out)
}

/// Parse `12`, `-3`, `0.125`, `1e-6` or `3/8` exactly.
pub fn parse_rational(s: &str) -> Option<Q> {
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n: i128 = n.trim().parse().ok()?;
        let d: i128 = d.trim().parse().ok()?;
        return (d != 0).then(|| Q::new(n, d));
    }
    let (mant, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (neg, digits) = match mant.strip_prefix('-') {
        Some(r) => (true, r),
        None => (false, mant.strip_prefix('+').unwrap_or(mant)),
    };
    let (ip, fp) = digits.split_once('.').unwrap_or((digits, ""));
    if ip.is_empty() && fp.is_empty() {
        return None;
    }
    if !ip.chars().chain(fp.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let mut num: i128 = 0;
    for c in ip.chars().chain(fp.chars()) {
        num = num.checked_mul(10)?.checked_add(c.to_digit(10)? as i128)?;
    }
    let scale = exp - fp.len() as i32;
    let pow = 10i128.checked_pow(scale.unsigned_abs())?;
    let v = if scale >= 0 {
        Q::from_integer(num.checked_mul(pow)?)
    } else {
        Q::new(num, pow)
    };
    Some(if neg { -v } else { v })
}

/// Exact decimal when the denominator divides a power of ten, otherwise
/// `n/d`.
pub fn format_rational(q: &Q) -> String {
    if q.is_integer() {
        return q.to_integer().to_string();
    }
    let mut d = *q.denom();
    let mut digits = 0u32;
    for f in [2i128, 5] {
        while d % f == 0 {
            d /= f;
        }
    }
    if d != 1 {
        return format!("{}/{}", q.numer(), q.denom());
    }
    while !(q * Q::from_integer(10i128.pow(digits))).is_integer() {
        digits += 1;
    }
    let scaled = (q * Q::from_integer(10i128.pow(digits))).to_integer();
    let sign = if scaled < 0 { "-" } else { "" };
    let a = scaled.unsigned_abs();
    let p = 10u128.pow(digits);
    format!("{sign}{}.{:0width$}", a / p, a % p, width = digits as usize)
}

pub fn to_f64(q: &Q) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

const INT_KEYS: [&str; 7] = ["N", "N_prime", "B", "B_prime", "L", "p_pail", "p_xpir"];

impl CostModel {
    fn int_slot(&mut self, key: &str) -> Option<&mut Option<u64>> {
        Some(match key {
            "N" => &mut self.n,
            "N_prime" => &mut self.n_prime,
            "B" => &mut self.b,
            "B_prime" => &mut self.b_prime,
            "L" => &mut self.l,
            "p_pail" => &mut self.p_pail,
            "p_xpir" => &mut self.p_xpir,
            _ => return None,
        })
    }

    fn q_slot(&mut self, key: &str) -> Option<&mut Option<Q>> {
        Some(match key {
            "e_pail" => &mut self.pail.e,
            "d_pail" => &mut self.pail.d,
            "a_pail" => &mut self.pail.a,
            "c_pail" => &mut self.pail.c,
            "e_xpir" => &mut self.xpir.e,
            "d_xpir" => &mut self.xpir.d,
            "a_xpir" => &mut self.xpir.a,
            "c_xpir" => &mut self.xpir.c,
            "h" => &mut self.h,
            "s" => &mut self.s,
            "s_shift" => &mut self.s_shift,
            "y_per_in" => &mut self.y_per_in,
            "sz_per_in" => &mut self.sz_per_in,
            "sz_email" => &mut self.sz_email,
            _ => return None,
        })
    }

    /// Set one constant by name.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CostError> {
        let bad = || CostError::Value {
            key: key.to_string(),
            value: value.to_string(),
        };
        if let Some(slot) = self.int_slot(key) {
            *slot = Some(value.trim().parse().map_err(|_| bad())?);
            return Ok(());
        }
        let v = parse_rational(value).ok_or_else(bad)?;
        if v < Q::zero() {
            return Err(bad());
        }
        match key {
            "K_cpu" => self.k_cpu = v,
            "K_net" => self.k_net = v,
            _ => {
                *self
                    .q_slot(key)
                    .ok_or_else(|| CostError::Unknown(key.to_string()))? = Some(v)
            }
        }
        Ok(())
    }

    /// Apply `key = value` lines; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<(), CostError> {
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or(CostError::Syntax(i + 1))?;
            self.set(k.trim(), v.trim())?;
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self, CostError> {
        let mut cm = Self::default();
        cm.apply_text(text)?;
        Ok(cm)
    }

    /// Every set constant as `key = value` pairs, in a fixed order.
    pub fn entries(&self) -> BTreeMap<&'static str, String> {
        let mut out = BTreeMap::new();
        let mut me = self.clone();
        for k in INT_KEYS {
            if let Some(v) = *me.int_slot(k).unwrap() {
                out.insert(k, v.to_string());
            }
        }
        for k in [
            "e_pail",
            "d_pail",
            "a_pail",
            "c_pail",
            "e_xpir",
            "d_xpir",
            "a_xpir",
            "c_xpir",
            "h",
            "s",
            "s_shift",
            "y_per_in",
            "sz_per_in",
            "sz_email",
        ] {
            if let Some(v) = *me.q_slot(k).unwrap() {
                out.insert(k, format_rational(&v));
            }
        }
        out.insert("K_cpu", format_rational(&self.k_cpu));
        out.insert("K_net", format_rational(&self.k_net));
        out
    }
}

impl fmt::Display for CostModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in self.entries() {
            writeln!(f, "{k} = {v}")?;
        }
        Ok(())
    }
}
