//! Explicit prototype memory, averaged-activation memory, scoring, and
//! 2× holographic compression of the prototype memory.

use std::collections::{BTreeMap, HashSet};

use ndarray::{concatenate, Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::data::{ClassId, Sample};
use crate::embed::{self, EmbedLayer};
use crate::error::{Error, Result};
use crate::hdvec::{self, ensure_same_dim, Attention, KeySeed, SharpenConfig};
use crate::mat;
use crate::scalar::Scalar;

/// Class prototypes, one `d`-dimensional column per learned class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplicitMemory<T> {
    prototypes: Array2<T>,
    class_ids: Vec<ClassId>,
}

/// Per-class averaged extractor activations, one `d_f` column per class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaaMemory<T> {
    activations: Array2<T>,
    class_ids: Vec<ClassId>,
    shot_counts: Vec<usize>,
}

impl<T: Scalar> ExplicitMemory<T> {
    pub fn new(d: usize) -> Self {
        Self {
            prototypes: Array2::zeros((d, 0)),
            class_ids: Vec::new(),
        }
    }

    pub fn from_parts(prototypes: Array2<T>, class_ids: Vec<ClassId>) -> Result<Self> {
        ensure_same_dim(prototypes.ncols(), class_ids.len())?;
        ensure_distinct(&class_ids)?;
        mat::ensure_finite(&prototypes.view())?;
        Ok(Self {
            prototypes,
            class_ids,
        })
    }

    pub fn dim(&self) -> usize {
        self.prototypes.nrows()
    }

    pub fn len(&self) -> usize {
        self.class_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.class_ids.is_empty()
    }

    pub fn prototypes(&self) -> ArrayView2<'_, T> {
        self.prototypes.view()
    }

    pub fn class_ids(&self) -> &[ClassId] {
        &self.class_ids
    }

    pub fn contains(&self, class: ClassId) -> bool {
        self.class_ids.contains(&class)
    }

    /// Replaces every prototype, keeping class order.
    pub fn set_prototypes(&mut self, prototypes: Array2<T>) -> Result<()> {
        ensure_same_dim(self.dim(), prototypes.nrows())?;
        ensure_same_dim(self.len(), prototypes.ncols())?;
        mat::ensure_finite(&prototypes.view())?;
        self.prototypes = prototypes;
        Ok(())
    }

    fn append(&mut self, columns: Array2<T>, classes: &[ClassId]) {
        self.prototypes = concatenate![Axis(1), self.prototypes, columns];
        self.class_ids.extend_from_slice(classes);
    }
}

impl<T: Scalar> GaaMemory<T> {
    pub fn new(d_f: usize) -> Self {
        Self {
            activations: Array2::zeros((d_f, 0)),
            class_ids: Vec::new(),
            shot_counts: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.activations.nrows()
    }

    pub fn len(&self) -> usize {
        self.class_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.class_ids.is_empty()
    }

    pub fn activations(&self) -> ArrayView2<'_, T> {
        self.activations.view()
    }

    pub fn class_ids(&self) -> &[ClassId] {
        &self.class_ids
    }

    pub fn shot_counts(&self) -> &[usize] {
        &self.shot_counts
    }

    fn append(&mut self, columns: Array2<T>, classes: &[ClassId], counts: &[usize]) {
        self.activations = concatenate![Axis(1), self.activations, columns];
        self.class_ids.extend_from_slice(classes);
        self.shot_counts.extend_from_slice(counts);
    }
}

fn ensure_distinct(ids: &[ClassId]) -> Result<()> {
    let mut seen = HashSet::with_capacity(ids.len());
    for &id in ids {
        if !seen.insert(id) {
            return Err(Error::DuplicateClass(id));
        }
    }
    Ok(())
}

/// Averages the support set per class (ascending class id).
///
/// With `shots = Some(k)` every class must have exactly `k` samples;
/// with `None` any positive count is accepted.
pub(crate) fn average_by_class<T: Scalar>(
    support: &[Sample<T>],
    d_f: usize,
    shots: Option<usize>,
) -> Result<(Vec<ClassId>, Array2<T>, Vec<usize>)> {
    let mut groups: BTreeMap<ClassId, Vec<&Sample<T>>> = BTreeMap::new();
    for s in support {
        ensure_same_dim(d_f, s.features.len())?;
        hdvec::ensure_finite(&s.features)?;
        groups.entry(s.label).or_default().push(s);
    }
    let mut means = Array2::zeros((d_f, groups.len()));
    let mut classes = Vec::with_capacity(groups.len());
    let mut counts = Vec::with_capacity(groups.len());
    for (col, (&class, members)) in groups.iter().enumerate() {
        if let Some(k) = shots {
            if members.len() != k {
                return Err(Error::ShotCountMismatch {
                    class,
                    expected: k,
                    got: members.len(),
                });
            }
        }
        let n = T::lit(members.len() as f64);
        let mut column = means.column_mut(col);
        for s in members {
            for (m, &x) in column.iter_mut().zip(&s.features) {
                *m += x;
            }
        }
        column.mapv_inplace(|x| x / n);
        classes.push(class);
        counts.push(members.len());
    }
    Ok((classes, means, counts))
}

/// Learns new classes from a support set: averages each class's activations,
/// embeds the averages as prototypes and appends both.
///
/// Existing columns are never touched. `gaam` may be `None` when the
/// averaged activations are not retained (averaged-prototype mode).
pub fn add_classes<T: Scalar>(
    em: &mut ExplicitMemory<T>,
    gaam: Option<&mut GaaMemory<T>>,
    layer: &EmbedLayer<T>,
    support: &[Sample<T>],
    shots: usize,
) -> Result<Vec<ClassId>> {
    add_classes_inner(em, gaam, layer, support, Some(shots))
}

pub(crate) fn add_classes_inner<T: Scalar>(
    em: &mut ExplicitMemory<T>,
    gaam: Option<&mut GaaMemory<T>>,
    layer: &EmbedLayer<T>,
    support: &[Sample<T>],
    shots: Option<usize>,
) -> Result<Vec<ClassId>> {
    ensure_same_dim(em.dim(), layer.out_dim())?;
    if let Some(g) = gaam.as_deref() {
        ensure_same_dim(g.dim(), layer.in_dim())?;
        if g.class_ids != em.class_ids {
            return Err(Error::InvalidConfig(
                "GAA memory is not aligned with the explicit memory".into(),
            ));
        }
    }
    if support.is_empty() {
        return Err(Error::EmptyInput);
    }
    let (classes, means, counts) = average_by_class(support, layer.in_dim(), shots)?;
    if let Some(&dup) = classes.iter().find(|c| em.contains(**c)) {
        return Err(Error::DuplicateClass(dup));
    }
    let protos = layer.forward_columns(&means.view())?;
    em.append(protos, &classes);
    if let Some(g) = gaam {
        g.append(means, &classes, &counts);
    }
    Ok(classes)
}

/// Raw cosine scores of a query against every stored class.
pub fn score<T: Scalar>(
    em: &ExplicitMemory<T>,
    layer: &EmbedLayer<T>,
    query: &[T],
) -> Result<Vec<T>> {
    if em.is_empty() {
        return Err(Error::EmptyMemory);
    }
    embed::scores(layer, &em.prototypes.view(), query)
}

/// Index of the largest score; ties resolve to the lowest index.
pub(crate) fn argmax<T: Scalar>(scores: impl IntoIterator<Item = T>) -> usize {
    let mut best = 0;
    let mut best_val = T::neg_infinity();
    for (i, s) in scores.into_iter().enumerate() {
        if s > best_val {
            best = i;
            best_val = s;
        }
    }
    best
}

/// Class with the highest raw cosine score.
pub fn predict<T: Scalar>(
    em: &ExplicitMemory<T>,
    layer: &EmbedLayer<T>,
    query: &[T],
) -> Result<ClassId> {
    let s = score(em, layer, query)?;
    Ok(em.class_ids[argmax(s)])
}

/// Scores sharpened into an attention vector over stored classes.
pub fn readout<T: Scalar>(
    em: &ExplicitMemory<T>,
    layer: &EmbedLayer<T>,
    query: &[T],
    kind: Attention,
    cfg: &SharpenConfig<T>,
) -> Result<Vec<T>> {
    let s = score(em, layer, query)?;
    hdvec::attention(kind, &s, cfg)
}

/// Predicts every column of `queries` (`d_f × N`) in one pass.
pub fn predict_batch<T: Scalar>(
    em: &ExplicitMemory<T>,
    layer: &EmbedLayer<T>,
    queries: &ArrayView2<'_, T>,
) -> Result<Vec<ClassId>> {
    if em.is_empty() {
        return Err(Error::EmptyMemory);
    }
    ensure_same_dim(em.dim(), layer.out_dim())?;
    let protos = mat::tanh(&em.prototypes.view());
    let protos = mat::normalize_columns(&protos.view(), &mat::column_norms(&protos.view())?);
    let embedded = mat::tanh(&layer.forward_columns(queries)?.view());
    let norms = mat::column_norms(&embedded.view())?;
    let embedded = mat::normalize_columns(&embedded.view(), &norms);
    let scores = protos.t().dot(&embedded);
    Ok(scores
        .columns()
        .into_iter()
        .map(|col| em.class_ids[argmax(col.iter().copied())])
        .collect())
}

/// Members bound into one compressed slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotMember {
    pub class_id: ClassId,
    pub key: KeySeed,
}

/// Prototype memory with consecutive pairs superposed as
/// `p₁ ⊛ c₁ + p₂ ⊛ c₂`; only the key seeds are stored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompressedMemory<T> {
    slots: Array2<T>,
    members: Vec<Vec<SlotMember>>,
}

impl<T: Scalar> CompressedMemory<T> {
    pub fn dim(&self) -> usize {
        self.slots.nrows()
    }

    pub fn slot_count(&self) -> usize {
        self.members.len()
    }

    pub fn slots(&self) -> ArrayView2<'_, T> {
        self.slots.view()
    }

    pub fn members(&self) -> &[Vec<SlotMember>] {
        &self.members
    }

    /// Class ids in original memory order.
    pub fn class_ids(&self) -> Vec<ClassId> {
        self.members
            .iter()
            .flat_map(|m| m.iter().map(|x| x.class_id))
            .collect()
    }

    fn locate(&self, class: ClassId) -> Option<(usize, KeySeed)> {
        self.members.iter().enumerate().find_map(|(slot, m)| {
            m.iter()
                .find(|x| x.class_id == class)
                .map(|x| (slot, x.key))
        })
    }

    /// Noisy prototype estimate `p̂ = c ⊙ r` for one class.
    pub fn decompress_class(&self, class: ClassId) -> Result<Vec<T>> {
        let (slot, key) = self.locate(class).ok_or(Error::UnknownClass(class))?;
        let key = hdvec::key_from_seed::<T>(key, self.dim());
        let trace = self.slots.column(slot).to_vec();
        hdvec::circ_correlate(&key, &trace)
    }

    /// Every prototype estimate, as an explicit memory in original order.
    pub fn decompress_all(&self) -> Result<ExplicitMemory<T>> {
        let ids = self.class_ids();
        let mut protos = Array2::zeros((self.dim(), ids.len()));
        for (i, &id) in ids.iter().enumerate() {
            protos
                .column_mut(i)
                .assign(&Array1::from(self.decompress_class(id)?));
        }
        ExplicitMemory::from_parts(protos, ids)
    }
}

/// Binds consecutive prototypes (memory order) with keys seeded by
/// `seed_base + memory index` and superposes each pair into one slot.
pub fn compress<T: Scalar>(em: &ExplicitMemory<T>, seed_base: KeySeed) -> Result<CompressedMemory<T>> {
    if em.is_empty() {
        return Err(Error::EmptyMemory);
    }
    let d = em.dim();
    let slot_count = em.len().div_ceil(2);
    let mut slots = Array2::zeros((d, slot_count));
    let mut members = Vec::with_capacity(slot_count);
    for slot in 0..slot_count {
        let mut bound = Array1::zeros(d);
        let mut m = Vec::with_capacity(2);
        for idx in (2 * slot)..(2 * slot + 2).min(em.len()) {
            let key = seed_base.offset(idx as u32);
            let c = hdvec::key_from_seed::<T>(key, d);
            let p = em.prototypes.column(idx).to_vec();
            bound += &Array1::from(hdvec::circ_convolve(&p, &c)?);
            m.push(SlotMember {
                class_id: em.class_ids[idx],
                key,
            });
        }
        slots.column_mut(slot).assign(&bound);
        members.push(m);
    }
    Ok(CompressedMemory { slots, members })
}

/// Prediction against prototypes unbound from the compressed memory.
pub fn predict_compressed<T: Scalar>(
    cm: &CompressedMemory<T>,
    layer: &EmbedLayer<T>,
    query: &[T],
) -> Result<ClassId> {
    let em = cm.decompress_all()?;
    predict(&em, layer, query)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn gaussian(seed: u64, n: usize) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, 1.0).unwrap();
        (0..n).map(|_| normal.sample(&mut rng)).collect()
    }

    fn support(classes: &[u32], shots: usize, d_f: usize, seed: u64) -> Vec<Sample<f64>> {
        let mut out = Vec::new();
        let mut s = seed;
        for &c in classes {
            for _ in 0..shots {
                out.push(Sample::new(c, gaussian(s, d_f)));
                s += 1;
            }
        }
        out
    }

    #[test]
    fn single_shot_average_is_the_sample() {
        let layer = EmbedLayer::<f64>::random(8, 5, 1);
        let mut em = ExplicitMemory::new(8);
        let mut gaam = GaaMemory::new(5);
        let sup = support(&[3], 1, 5, 10);
        add_classes(&mut em, Some(&mut gaam), &layer, &sup, 1).unwrap();
        assert_eq!(gaam.activations().column(0).to_vec(), sup[0].features);
        let want = layer.forward(&sup[0].features).unwrap();
        for (a, b) in em.prototypes().column(0).iter().zip(&want) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(gaam.shot_counts(), &[1]);
    }

    #[test]
    fn identical_shots_average_to_themselves() {
        let layer = EmbedLayer::<f64>::random(8, 5, 1);
        let mut em = ExplicitMemory::new(8);
        let mut gaam = GaaMemory::new(5);
        let v = vec![0.25, -1.5, 2.0, 0.0, 4.0];
        let sup = vec![Sample::new(7, v.clone()), Sample::new(7, v.clone())];
        add_classes(&mut em, Some(&mut gaam), &layer, &sup, 2).unwrap();
        assert_eq!(gaam.activations().column(0).to_vec(), v);
    }

    #[test]
    fn prototype_of_mean_equals_mean_of_prototypes() {
        let layer = EmbedLayer::<f64>::random(16, 10, 4);
        let mut em = ExplicitMemory::new(16);
        let sup = support(&[0], 5, 10, 50);
        add_classes(&mut em, None, &layer, &sup, 5).unwrap();
        let embedded: Vec<Vec<f64>> = sup.iter().map(|s| layer.forward(&s.features).unwrap()).collect();
        for i in 0..16 {
            let mean = embedded.iter().map(|e| e[i]).sum::<f64>() / 5.0;
            let p = em.prototypes()[[i, 0]];
            assert!((p - mean).abs() <= 1e-9 * mean.abs() + 1e-14);
        }
    }

    #[test]
    fn add_classes_errors_and_isolation() {
        let layer = EmbedLayer::<f64>::random(8, 5, 1);
        let mut em = ExplicitMemory::new(8);
        add_classes(&mut em, None, &layer, &support(&[1, 2], 2, 5, 0), 2).unwrap();
        let before = em.prototypes().to_owned();

        let dup = add_classes(&mut em, None, &layer, &support(&[2, 9], 2, 5, 3), 2);
        assert!(matches!(dup, Err(Error::DuplicateClass(2))));
        let short = add_classes(&mut em, None, &layer, &support(&[4], 1, 5, 3), 2);
        assert!(matches!(short, Err(Error::ShotCountMismatch { class: 4, expected: 2, got: 1 })));
        let wrong = add_classes(&mut em, None, &layer, &support(&[4], 2, 4, 3), 2);
        assert!(matches!(wrong, Err(Error::DimensionMismatch { .. })));
        assert_eq!(em.len(), 2);

        add_classes(&mut em, None, &layer, &support(&[5, 6], 2, 5, 9), 2).unwrap();
        assert_eq!(em.class_ids(), &[1, 2, 5, 6]);
        let after = em.prototypes();
        for j in 0..2 {
            for i in 0..8 {
                assert_eq!(after[[i, j]].to_bits(), before[[i, j]].to_bits());
            }
        }
    }

    #[test]
    fn score_examples() {
        let id = EmbedLayer::<f64>::identity(4);
        let em = ExplicitMemory::from_parts(
            array![[1.0, 0.0, 0.3], [0.5, 0.0, -0.2], [0.0, 2.0, 0.9], [0.0, -1.0, 0.1]],
            vec![10, 11, 12],
        )
        .unwrap();
        let s = score(&em, &id, &[1.0, 0.5, 0.0, 0.0]).unwrap();
        assert!((s[0] - 1.0).abs() < 1e-12);
        assert!(s[1].abs() < 1e-15);
        // compositional oracle
        let q = [0.2, -0.4, 1.1, 0.7];
        let tq = hdvec::tanh_elem(&q).unwrap();
        let s = score(&em, &id, &q).unwrap();
        for (i, si) in s.iter().enumerate() {
            let tp = hdvec::tanh_elem(&em.prototypes().column(i).to_vec()).unwrap();
            assert!((si - hdvec::cosine(&tq, &tp).unwrap()).abs() < 1e-12);
        }
        assert!(matches!(
            score(&ExplicitMemory::new(4), &id, &q),
            Err(Error::EmptyMemory)
        ));
        assert!(matches!(score(&em, &id, &[0.0; 4]), Err(Error::ZeroVector)));
    }

    #[test]
    fn predict_examples_and_tie_break() {
        let id = EmbedLayer::<f64>::identity(3);
        let single = ExplicitMemory::from_parts(array![[1.0], [0.0], [0.0]], vec![42]).unwrap();
        assert_eq!(predict(&single, &id, &[-1.0, 2.0, 0.5]).unwrap(), 42);

        let tied = ExplicitMemory::from_parts(
            array![[1.0, 1.0, 0.0], [0.0, 0.0, 1.0], [0.0, 0.0, 0.0]],
            vec![9, 4, 7],
        )
        .unwrap();
        assert_eq!(predict(&tied, &id, &[1.0, 0.0, 0.0]).unwrap(), 9);

        let layer = EmbedLayer::<f64>::random(32, 12, 8);
        let mut em = ExplicitMemory::new(32);
        let sup = support(&[0, 1, 2, 3, 4, 5], 1, 12, 500);
        add_classes(&mut em, None, &layer, &sup, 1).unwrap();
        for s in &sup {
            assert_eq!(predict(&em, &layer, &s.features).unwrap(), s.label);
        }
    }

    #[test]
    fn batch_prediction_agrees_with_single() {
        let layer = EmbedLayer::<f64>::random(24, 10, 2);
        let mut em = ExplicitMemory::new(24);
        add_classes(&mut em, None, &layer, &support(&[0, 1, 2, 3], 3, 10, 1), 3).unwrap();
        let queries = support(&[0], 40, 10, 999);
        let data = crate::data::Dataset::new(10, queries.clone()).unwrap();
        let batch = predict_batch(&em, &layer, &data.feature_matrix().view()).unwrap();
        for (q, b) in queries.iter().zip(batch) {
            assert_eq!(predict(&em, &layer, &q.features).unwrap(), b);
        }
    }

    #[test]
    fn readout_is_attention_over_scores() {
        let cfg = SharpenConfig::<f64>::default();
        let id = EmbedLayer::<f64>::identity(2);
        let em = ExplicitMemory::from_parts(array![[1.0, 0.0], [0.0, 1.0]], vec![0, 1]).unwrap();
        let r = readout(&em, &id, &[1.0, 0.0], Attention::Softabs, &cfg).unwrap();
        assert!((r[0] - 0.986702).abs() < 1e-4);
        let r = readout(&em, &id, &[1.0, 1.0], Attention::Softmax, &cfg).unwrap();
        assert!((r[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn score_is_permutation_equivariant() {
        let layer = EmbedLayer::<f64>::random(16, 6, 3);
        let mut em = ExplicitMemory::new(16);
        add_classes(&mut em, None, &layer, &support(&[0, 1, 2, 3, 4], 1, 6, 70), 1).unwrap();
        let perm = [3usize, 0, 4, 2, 1];
        let p = em.prototypes();
        let mut permuted = Array2::zeros(p.raw_dim());
        for (j, &src) in perm.iter().enumerate() {
            permuted.column_mut(j).assign(&p.column(src));
        }
        let ids: Vec<u32> = perm.iter().map(|&i| em.class_ids()[i]).collect();
        let pem = ExplicitMemory::from_parts(permuted, ids).unwrap();
        let q = gaussian(1234, 6);
        let a = score(&em, &layer, &q).unwrap();
        let b = score(&pem, &layer, &q).unwrap();
        for (j, &src) in perm.iter().enumerate() {
            assert!((a[src] - b[j]).abs() < 1e-12);
        }
        assert_eq!(predict(&em, &layer, &q).unwrap(), predict(&pem, &layer, &q).unwrap());
    }

    fn random_memory(d: usize, c: usize, seed: u64) -> ExplicitMemory<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let protos = Array2::from_shape_simple_fn((d, c), || normal.sample(&mut rng));
        ExplicitMemory::from_parts(protos, (0..c as u32).map(|i| 100 + i).collect()).unwrap()
    }

    #[test]
    fn compression_structure() {
        let em = random_memory(64, 5, 1);
        let cm = compress(&em, KeySeed(7)).unwrap();
        assert_eq!(cm.slot_count(), 3);
        assert_eq!(cm.members()[2].len(), 1);
        assert_eq!(cm.class_ids(), em.class_ids());
        assert_eq!(cm.members()[1][1].key, KeySeed(10));
        assert!(matches!(cm.decompress_class(5), Err(Error::UnknownClass(5))));
        assert!(matches!(
            compress(&ExplicitMemory::<f64>::new(4), KeySeed(0)),
            Err(Error::EmptyMemory)
        ));
    }

    #[test]
    fn single_member_slot_round_trip() {
        // One bound pair: retrieval cosine concentrates near 1/sqrt(2).
        let mut total = 0.0;
        for t in 0..20 {
            let em = random_memory(512, 1, 300 + t);
            let cm = compress(&em, KeySeed(t as u32 * 13)).unwrap();
            let p_hat = cm.decompress_class(100).unwrap();
            let c = hdvec::cosine(&p_hat, &em.prototypes().column(0).to_vec()).unwrap();
            assert!(c > 0.5);
            total += c;
        }
        assert!((0.65..0.76).contains(&(total / 20.0)));
    }

    #[test]
    fn retrieval_spread_shrinks_with_dimension() {
        // Mean retrieval cosine is dimension independent; its spread is not.
        let spread = |d: usize| {
            let cs: Vec<f64> = (0..100)
                .map(|t| {
                    let em = random_memory(d, 2, 5000 + t);
                    let cm = compress(&em, KeySeed(t as u32 * 2)).unwrap();
                    hdvec::cosine(&cm.decompress_class(100).unwrap(), &em.prototypes().column(0).to_vec())
                        .unwrap()
                })
                .collect();
            let mean = cs.iter().sum::<f64>() / 100.0;
            (cs.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / 99.0).sqrt()
        };
        assert!(spread(512) < spread(64));
    }

    #[test]
    fn compressed_prediction() {
        let layer = EmbedLayer::<f64>::identity(512);
        let mut hits = 0;
        let trials = 40;
        for t in 0..trials {
            let em = random_memory(512, 10, 900 + t);
            let cm = compress(&em, KeySeed(t as u32 * 31)).unwrap();
            let target = (t % 10) as usize;
            let q = em.prototypes().column(target).to_vec();
            if predict_compressed(&cm, &layer, &q).unwrap() == em.class_ids()[target] {
                hits += 1;
            }
        }
        assert!(hits as f64 >= 0.95 * trials as f64, "{hits}/{trials}");

        let one = random_memory(32, 1, 5);
        let cm = compress(&one, KeySeed(1)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..5 {
            let q: Vec<f64> = (0..32).map(|_| rng.random::<f64>() - 0.5).collect();
            assert_eq!(predict_compressed(&cm, &EmbedLayer::identity(32), &q).unwrap(), 100);
        }
    }

    #[test]
    fn compression_is_deterministic() {
        let em = random_memory(128, 7, 77);
        let a = compress(&em, KeySeed(400)).unwrap();
        let restored = a.decompress_all().unwrap();
        assert_eq!(restored.class_ids(), em.class_ids());
        let b = compress(&em, KeySeed(400)).unwrap();
        let bits = |m: &CompressedMemory<f64>| m.slots().iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
    }
}
