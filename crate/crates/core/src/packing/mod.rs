//! Slot layouts for packing a `B x N` model into ciphertexts, the client's
//! packed dot product, and slot extraction.
//!
//! Within-row packing puts up to `p` categories of one feature row into a
//! ciphertext, so each row costs `ceil(B/p)` ciphertexts. Across-row packing
//! keeps `floor(B/p)` full column groups the same way and packs the residual
//! `k = B mod p` columns of `floor(p/k)` consecutive rows into one
//! ciphertext; the client realigns a row with a rotation before use.

use alloc::vec;
use alloc::vec::Vec;

use rand_core::RngCore;

use crate::ahe::{
    self, AheError, AheParams, BackendParams, Ciphertext, PackedPlaintext, PublicKey, SecretKey,
};
use crate::model::{FeatureVector, QuantizedModel};
use crate::wire::{DecodeError, Reader, Writer};

pub const DEFAULT_B_IN: u32 = 12;
pub const DEFAULT_F_IN: u32 = 6;
pub const DEFAULT_LAMBDA: u32 = 12;
pub const DEFAULT_L_MAX: usize = 692;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PackingError {
    #[error(transparent)]
    Ahe(#[from] AheError),
    #[error("invalid layout: {0}")]
    Layout(&'static str),
    #[error("across-row packing needs a backend with slot rotation")]
    NeedsRotation,
    #[error("model does not match layout: {0}")]
    Shape(&'static str),
    #[error("feature {id} out of range for {num_features} features")]
    FeatureOutOfRange { id: u32, num_features: usize },
    #[error("email has {found} features, layout allows {max}")]
    TooManyFeatures { found: usize, max: usize },
    #[error("feature frequency {0} does not fit f_in bits")]
    FrequencyTooLarge(u32),
    #[error("category index {index} outside 1..={count}")]
    CategoryIndex { index: usize, count: usize },
    #[error("accumulated noise would exceed the decryption bound")]
    NoiseBudget,
    #[error("decode: {0}")]
    Decode(#[from] DecodeError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PackingMode {
    WithinRow,
    AcrossRow,
}

impl PackingMode {
    pub fn name(self) -> &'static str {
        match self {
            PackingMode::WithinRow => "within-row",
            PackingMode::AcrossRow => "across-row",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "within-row" | "within_row" => Some(PackingMode::WithinRow),
            "across-row" | "across_row" => Some(PackingMode::AcrossRow),
            _ => None,
        }
    }
}

fn ceil_log2(x: usize) -> u32 {
    if x <= 1 {
        0
    } else {
        usize::BITS - (x - 1).leading_zeros()
    }
}

/// Slot geometry shared by provider and client.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PackingLayout {
    pub b_in: u32,
    pub f_in: u32,
    pub l_max: usize,
    /// Semantic bits of a dot product: `ceil(log2 l_max) + b_in + f_in`.
    pub b: u32,
    pub lambda: u32,
    /// `b + lambda + 1`.
    pub b_slot: u32,
    pub mode: PackingMode,
    pub params: AheParams,
}

pub fn make_layout(
    b_in: u32,
    f_in: u32,
    l_max: usize,
    lambda: u32,
    backend: BackendParams,
    mode: PackingMode,
) -> Result<PackingLayout, PackingError> {
    if b_in == 0 || f_in == 0 || l_max == 0 || lambda == 0 {
        return Err(PackingError::Layout(
            "b_in, f_in, l_max and lambda must be positive",
        ));
    }
    if f_in > 32 {
        return Err(PackingError::Layout("f_in must be at most 32"));
    }
    let b = ceil_log2(l_max) + b_in + f_in;
    let b_slot = b + lambda + 1;
    if b_slot > backend.max_slot_bits() {
        return Err(PackingError::Layout("slot width exceeds backend capacity"));
    }
    let params = AheParams::new(backend, b_slot)?;
    if mode == PackingMode::AcrossRow && !params.supports_rotation() {
        return Err(PackingError::NeedsRotation);
    }
    Ok(PackingLayout {
        b_in,
        f_in,
        l_max,
        b,
        lambda,
        b_slot,
        mode,
        params,
    })
}

/// How a column group stores its rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupKind {
    /// One ciphertext per feature row.
    PerRow,
    /// `rows_per_ct` consecutive rows share a ciphertext, row `r` at slot
    /// offset `r * columns`.
    Shared { rows_per_ct: usize },
}

/// Column-group geometry for a model with `num_categories` columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GroupShape {
    pub first_column: usize,
    pub columns: usize,
    pub kind: GroupKind,
}

impl GroupShape {
    pub fn row_ciphertexts(&self, num_features: usize) -> usize {
        match self.kind {
            GroupKind::PerRow => num_features,
            GroupKind::Shared { rows_per_ct } => num_features.div_ceil(rows_per_ct),
        }
    }

    /// (ciphertext index, slot offset) of feature row `i`.
    pub fn locate(&self, i: usize) -> (usize, usize) {
        match self.kind {
            GroupKind::PerRow => (i, 0),
            GroupKind::Shared { rows_per_ct } => {
                (i / rows_per_ct, (i % rows_per_ct) * self.columns)
            }
        }
    }
}

impl PackingLayout {
    pub fn slots(&self) -> usize {
        self.params.slots()
    }

    pub fn backend_params(&self) -> &AheParams {
        &self.params
    }

    /// Column groups in category order.
    pub fn groups(&self, num_categories: usize) -> Vec<GroupShape> {
        let p = self.slots();
        let full = num_categories / p;
        let k = num_categories % p;
        let mut out: Vec<GroupShape> = (0..full)
            .map(|g| GroupShape {
                first_column: g * p,
                columns: p,
                kind: GroupKind::PerRow,
            })
            .collect();
        if k > 0 {
            let kind = match self.mode {
                PackingMode::WithinRow => GroupKind::PerRow,
                PackingMode::AcrossRow => GroupKind::Shared { rows_per_ct: p / k },
            };
            out.push(GroupShape {
                first_column: full * p,
                columns: k,
                kind,
            });
        }
        out
    }

    /// Model-row ciphertexts (priors excluded).
    pub fn row_ciphertext_count(&self, num_features: usize, num_categories: usize) -> usize {
        self.groups(num_categories)
            .iter()
            .map(|g| g.row_ciphertexts(num_features))
            .sum()
    }

    /// Prior-row ciphertexts: one per column group.
    pub fn prior_ciphertext_count(&self, num_categories: usize) -> usize {
        self.groups(num_categories).len()
    }

    pub fn total_ciphertext_count(&self, num_features: usize, num_categories: usize) -> usize {
        self.row_ciphertext_count(num_features, num_categories)
            + self.prior_ciphertext_count(num_categories)
    }

    /// `(ciphertext index, slot)` of category `j` (0-based) in a dot result.
    pub fn slot_of(&self, j: usize) -> (usize, usize) {
        let p = self.slots();
        (j / p, j % p)
    }

    /// Largest frequency a feature may carry.
    pub fn max_frequency(&self) -> u32 {
        ((1u64 << self.f_in) - 1) as u32
    }

    pub fn encode(&self, w: &mut Writer) {
        self.params.encode(w);
        w.u32(self.b_in)
            .u32(self.f_in)
            .u64(self.l_max as u64)
            .u32(self.lambda)
            .u8(match self.mode {
                PackingMode::WithinRow => 0,
                PackingMode::AcrossRow => 1,
            });
    }

    pub fn decode(r: &mut Reader<'_>) -> Result<Self, PackingError> {
        let params = AheParams::decode(r)?;
        let b_in = r.u32()?;
        let f_in = r.u32()?;
        let l_max = usize::try_from(r.u64()?).map_err(|_| DecodeError::Invalid("l_max"))?;
        let lambda = r.u32()?;
        let mode = match r.u8()? {
            0 => PackingMode::WithinRow,
            1 => PackingMode::AcrossRow,
            _ => return Err(DecodeError::Invalid("packing mode").into()),
        };
        let layout = make_layout(b_in, f_in, l_max, lambda, params.backend, mode)?;
        if layout.params != params {
            return Err(DecodeError::Invalid("slot width does not match layout").into());
        }
        Ok(layout)
    }
}

/// One column group of a packed model.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnGroup<T> {
    pub shape: GroupShape,
    pub rows: Vec<T>,
    pub prior: T,
}

/// Model packed into slots, generic over plaintext or ciphertext cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Packed<T> {
    pub layout: PackingLayout,
    pub num_features: usize,
    pub num_categories: usize,
    pub groups: Vec<ColumnGroup<T>>,
}

pub type PackedModel = Packed<PackedPlaintext>;
pub type EncryptedModel = Packed<Ciphertext>;

impl<T> Packed<T> {
    pub fn ciphertext_count(&self) -> usize {
        self.groups.iter().map(|g| g.rows.len() + 1).sum()
    }

    pub fn row_ciphertext_count(&self) -> usize {
        self.groups.iter().map(|g| g.rows.len()).sum()
    }

    /// Cells in grid order: for each group its rows, then its prior.
    pub fn cells(&self) -> impl Iterator<Item = &T> {
        self.groups
            .iter()
            .flat_map(|g| g.rows.iter().chain(core::iter::once(&g.prior)))
    }
}

/// Lay out a quantized model. Deterministic.
pub fn pack_model(
    qmodel: &QuantizedModel,
    layout: &PackingLayout,
) -> Result<PackedModel, PackingError> {
    let n = qmodel.num_features();
    let bcount = qmodel.num_categories();
    if n == 0 || bcount == 0 {
        return Err(PackingError::Shape(
            "model has no features or no categories",
        ));
    }
    if qmodel.b_in > layout.b_in {
        return Err(PackingError::Shape(
            "model parameters wider than layout b_in",
        ));
    }
    if qmodel.qweights.len() != bcount || qmodel.qweights.iter().any(|r| r.len() != n) {
        return Err(PackingError::Shape("ragged weight matrix"));
    }
    let limit = 1u64 << layout.b_in;
    if qmodel
        .qpriors
        .iter()
        .chain(qmodel.qweights.iter().flatten())
        .any(|&v| v >= limit)
    {
        return Err(PackingError::Shape("parameter does not fit b_in bits"));
    }
    let p = layout.slots();
    let params = &layout.params;
    let mut groups = Vec::new();
    for shape in layout.groups(bcount) {
        let cols = shape.first_column..shape.first_column + shape.columns;
        let mut rows = vec![vec![0u64; p]; shape.row_ciphertexts(n)];
        for i in 0..n {
            let (ct, off) = shape.locate(i);
            for (s, j) in cols.clone().enumerate() {
                rows[ct][off + s] = qmodel.qweights[j][i];
            }
        }
        let mut prior = vec![0u64; p];
        for (s, j) in cols.enumerate() {
            prior[s] = qmodel.qpriors[j];
        }
        groups.push(ColumnGroup {
            shape,
            rows: rows
                .into_iter()
                .map(|r| PackedPlaintext::new(params, r))
                .collect::<Result<_, _>>()?,
            prior: PackedPlaintext::new(params, prior)?,
        });
    }
    Ok(Packed {
        layout: *layout,
        num_features: n,
        num_categories: bcount,
        groups,
    })
}

/// Encrypt every packed cell. The provider uses its secret key, which for
/// the lattice backend keeps fresh noise to a single Gaussian term.
pub fn encrypt_model<R: RngCore>(
    sk: &SecretKey,
    packed: &PackedModel,
    rng: &mut R,
) -> Result<EncryptedModel, PackingError> {
    if sk.params() != &packed.layout.params {
        return Err(PackingError::Shape("key parameters differ from layout"));
    }
    let groups = packed
        .groups
        .iter()
        .map(|g| {
            Ok(ColumnGroup {
                shape: g.shape,
                rows: g
                    .rows
                    .iter()
                    .map(|pt| sk.encrypt(pt, rng))
                    .collect::<Result<_, AheError>>()?,
                prior: sk.encrypt(&g.prior, rng)?,
            })
        })
        .collect::<Result<_, PackingError>>()?;
    Ok(Packed {
        layout: packed.layout,
        num_features: packed.num_features,
        num_categories: packed.num_categories,
        groups,
    })
}

/// Decrypt every cell (provider-side checks and tests).
pub fn decrypt_model(sk: &SecretKey, emodel: &EncryptedModel) -> Result<PackedModel, PackingError> {
    let groups = emodel
        .groups
        .iter()
        .map(|g| {
            Ok(ColumnGroup {
                shape: g.shape,
                rows: g
                    .rows
                    .iter()
                    .map(|c| sk.decrypt(c))
                    .collect::<Result<_, AheError>>()?,
                prior: sk.decrypt(&g.prior)?,
            })
        })
        .collect::<Result<_, PackingError>>()?;
    Ok(Packed {
        layout: emodel.layout,
        num_features: emodel.num_features,
        num_categories: emodel.num_categories,
        groups,
    })
}

impl EncryptedModel {
    /// Header: layout, dimensions, group count.
    pub fn encode_header(&self, w: &mut Writer) {
        self.layout.encode(w);
        w.u64(self.num_features as u64)
            .u64(self.num_categories as u64);
    }

    /// Parse a header and return an empty model ready for cells.
    pub fn decode_header(r: &mut Reader<'_>) -> Result<ModelHeader, PackingError> {
        let layout = PackingLayout::decode(r)?;
        let num_features = usize::try_from(r.u64()?).map_err(|_| DecodeError::Invalid("N"))?;
        let num_categories = usize::try_from(r.u64()?).map_err(|_| DecodeError::Invalid("B"))?;
        if num_features == 0 || num_categories == 0 {
            return Err(PackingError::Shape(
                "model has no features or no categories",
            ));
        }
        Ok(ModelHeader {
            layout,
            num_features,
            num_categories,
        })
    }

    /// Header followed by every ciphertext in grid order.
    pub fn encode(&self, pk: &PublicKey, w: &mut Writer) -> Result<(), PackingError> {
        self.encode_header(w);
        for c in self.cells() {
            pk.write_ciphertext(c, w)?;
        }
        Ok(())
    }

    pub fn decode(pk: &PublicKey, r: &mut Reader<'_>) -> Result<Self, PackingError> {
        let header = Self::decode_header(r)?;
        if pk.params() != &header.layout.params {
            return Err(PackingError::Shape("key parameters differ from layout"));
        }
        let mut builder = header.builder();
        while !builder.is_complete() {
            builder.push(pk.read_ciphertext(r)?);
        }
        Ok(builder.finish().expect("complete"))
    }
}

/// Layout and dimensions of an encrypted model, sent before its cells.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelHeader {
    pub layout: PackingLayout,
    pub num_features: usize,
    pub num_categories: usize,
}

impl ModelHeader {
    pub fn ciphertext_count(&self) -> usize {
        self.layout
            .total_ciphertext_count(self.num_features, self.num_categories)
    }

    pub fn builder(&self) -> ModelBuilder {
        let shapes = self.layout.groups(self.num_categories);
        ModelBuilder {
            header: *self,
            shapes,
            groups: Vec::new(),
            pending: Vec::new(),
        }
    }
}

/// Reassembles an encrypted model from cells arriving in grid order.
#[derive(Debug)]
pub struct ModelBuilder {
    header: ModelHeader,
    shapes: Vec<GroupShape>,
    groups: Vec<ColumnGroup<Ciphertext>>,
    pending: Vec<Ciphertext>,
}

impl ModelBuilder {
    pub fn is_complete(&self) -> bool {
        self.groups.len() == self.shapes.len()
    }

    pub fn remaining(&self) -> usize {
        let done: usize = self.groups.iter().map(|g| g.rows.len() + 1).sum();
        self.header.ciphertext_count() - done - self.pending.len()
    }

    /// Accept the next cell. Returns false if the model is already complete.
    pub fn push(&mut self, c: Ciphertext) -> bool {
        let Some(shape) = self.shapes.get(self.groups.len()).copied() else {
            return false;
        };
        if self.pending.len() < shape.row_ciphertexts(self.header.num_features) {
            self.pending.push(c);
        } else {
            self.groups.push(ColumnGroup {
                shape,
                rows: core::mem::take(&mut self.pending),
                prior: c,
            });
        }
        true
    }

    pub fn finish(self) -> Option<EncryptedModel> {
        if !self.is_complete() {
            return None;
        }
        Some(Packed {
            layout: self.header.layout,
            num_features: self.header.num_features,
            num_categories: self.header.num_categories,
            groups: self.groups,
        })
    }
}

/// Client-side dot products: one accumulator per column group.
#[derive(Debug, Clone, PartialEq)]
pub struct PackedDotResult {
    pub ciphertexts: Vec<Ciphertext>,
    /// Category `j` (0-based) -> (ciphertext index, slot).
    pub slot_map: Vec<(usize, usize)>,
}

fn check_features(fv: &FeatureVector, emodel: &EncryptedModel) -> Result<(), PackingError> {
    let layout = &emodel.layout;
    if fv.len() > layout.l_max {
        return Err(PackingError::TooManyFeatures {
            found: fv.len(),
            max: layout.l_max,
        });
    }
    for &(id, x) in fv.entries() {
        if id as usize >= emodel.num_features {
            return Err(PackingError::FeatureOutOfRange {
                id,
                num_features: emodel.num_features,
            });
        }
        if x > layout.max_frequency() {
            return Err(PackingError::FrequencyTooLarge(x));
        }
    }
    Ok(())
}

/// `d_j = sum_i x_i qw[j][i] + qp[j]` for every category, homomorphically.
pub fn packed_dot(
    pk: &PublicKey,
    emodel: &EncryptedModel,
    fv: &FeatureVector,
) -> Result<PackedDotResult, PackingError> {
    let layout = &emodel.layout;
    if pk.params() != &layout.params {
        return Err(PackingError::Shape("key parameters differ from layout"));
    }
    check_features(fv, emodel)?;
    // one fresh public-key encryption (blinding) is added later
    if !ahe::noise_budget_ok(&layout.params, fv.len(), layout.f_in, 1) {
        return Err(PackingError::NoiseBudget);
    }
    let mut ciphertexts = Vec::with_capacity(emodel.groups.len());
    for g in &emodel.groups {
        let mut acc = g.prior.clone();
        for &(id, x) in fv.entries() {
            let (ct, off) = g.shape.locate(id as usize);
            let row = &g.rows[ct];
            let aligned;
            let row = if off == 0 {
                row
            } else {
                aligned = pk.rotate_left(row, off)?;
                &aligned
            };
            if x == 1 {
                pk.add_assign(&mut acc, row)?;
            } else {
                let scaled = pk.scalar_mul(row, x as u64)?;
                pk.add_assign(&mut acc, &scaled)?;
            }
        }
        ciphertexts.push(acc);
    }
    let slot_map = (0..emodel.num_categories)
        .map(|j| layout.slot_of(j))
        .collect();
    Ok(PackedDotResult {
        ciphertexts,
        slot_map,
    })
}

/// `(Q, R)` for a 1-based category index: `Q = ceil(index/p) - 1`,
/// `R = (index - 1) mod p`.
pub fn quotient_remainder(index: usize, p: usize) -> (usize, usize) {
    (index.div_ceil(p) - 1, (index - 1) % p)
}

/// Move category `index` (1-based) to slot 0 of its own ciphertext.
pub fn extract_slot(
    pk: &PublicKey,
    result: &PackedDotResult,
    index: usize,
) -> Result<Ciphertext, PackingError> {
    if !pk.params().supports_rotation() {
        return Err(PackingError::NeedsRotation);
    }
    let count = result.slot_map.len();
    if index == 0 || index > count {
        return Err(PackingError::CategoryIndex { index, count });
    }
    let (q, r) = quotient_remainder(index, pk.params().slots());
    debug_assert_eq!(result.slot_map[index - 1], (q, r));
    Ok(pk.rotate_left(&result.ciphertexts[q], r)?)
}
