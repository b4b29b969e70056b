//! Partition diagrams for moments of tuple sums over a random point set.
//! Slots are arranged in rows (one row per sum, one slot per tuple position);
//! admissible partitions never merge two slots of the same row, because a
//! tuple never repeats a point. Moment formulas sum a collapsed integral over
//! an admissible class: all such partitions for raw moments, partitions whose
//! every row meets a merged block for central moments, and partitions whose
//! block structure links all rows into one component for joint cumulants.
//! Everything here is cross-checked against direct falling-factorial algebra
//! on a finite atom space.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum DiagramError {
    #[error("row structure needs 1..=6 rows with sizes 1..=6 and at most 12 slots")]
    BadRows,
    #[error("kernel table needs k^q values, got {got} for k={k}, q={q}")]
    BadKernel { got: usize, k: usize, q: usize },
    #[error("need one kernel per row, all on the same atom space")]
    Mismatch,
    #[error("intensities must be positive and finite")]
    BadIntensity,
}

/// Row sizes of a diagram: one row per sum, `rows[l]` slots in row `l`.
#[derive(Clone, Debug, PartialEq)]
pub struct RowStructure {
    rows: Vec<usize>,
    row_of: Vec<usize>,
}

impl RowStructure {
    pub fn new(rows: Vec<usize>) -> Result<Self, DiagramError> {
        let total: usize = rows.iter().sum();
        if rows.is_empty()
            || rows.len() > 6
            || rows.iter().any(|&q| q == 0 || q > 6)
            || total > 12
        {
            return Err(DiagramError::BadRows);
        }
        let mut row_of = Vec::with_capacity(total);
        for (l, &q) in rows.iter().enumerate() {
            row_of.extend(std::iter::repeat(l).take(q));
        }
        Ok(RowStructure { rows, row_of })
    }

    pub fn rows(&self) -> &[usize] {
        &self.rows
    }

    pub fn m(&self) -> usize {
        self.rows.len()
    }

    pub fn total(&self) -> usize {
        self.row_of.len()
    }

    pub fn row_of(&self, slot: usize) -> usize {
        self.row_of[slot]
    }
}

/// A set partition of the slots in restricted-growth form.
#[derive(Clone, Debug, PartialEq)]
pub struct Partition {
    pub block_of: Vec<usize>,
    pub n_blocks: usize,
}

impl Partition {
    pub fn block_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0usize; self.n_blocks];
        for &b in &self.block_of {
            sizes[b] += 1;
        }
        sizes
    }
}

/// Visit every admissible partition (no block holds two slots of one row).
pub fn for_each_partition(rs: &RowStructure, mut f: impl FnMut(&Partition)) {
    let n = rs.total();
    let mut block_of = vec![0usize; n];
    // Bitmask of rows already present in each open block.
    let mut block_rows = vec![0u16; n];
    fn recurse(
        rs: &RowStructure,
        slot: usize,
        used: usize,
        block_of: &mut Vec<usize>,
        block_rows: &mut Vec<u16>,
        f: &mut impl FnMut(&Partition),
    ) {
        if slot == rs.total() {
            f(&Partition {
                block_of: block_of.clone(),
                n_blocks: used,
            });
            return;
        }
        let row_bit = 1u16 << rs.row_of(slot);
        for b in 0..=used {
            if b < used && block_rows[b] & row_bit != 0 {
                continue;
            }
            block_of[slot] = b;
            block_rows[b] |= row_bit;
            recurse(rs, slot + 1, used.max(b + 1), block_of, block_rows, f);
            if b < used {
                block_rows[b] &= !row_bit;
            } else {
                block_rows[b] = 0;
            }
        }
    }
    recurse(rs, 0, 0, &mut block_of, &mut block_rows, &mut f);
}

/// Materialize the admissible partitions; meant for small structures.
pub fn partitions(rs: &RowStructure) -> Vec<Partition> {
    let mut out = Vec::new();
    for_each_partition(rs, |p| out.push(p.clone()));
    out
}

/// True when the blocks link every row into one component: rows are adjacent
/// whenever they share a block.
pub fn links_all_rows(rs: &RowStructure, p: &Partition) -> bool {
    let m = rs.m();
    if m == 1 {
        return true;
    }
    let mut parent: Vec<usize> = (0..m).collect();
    fn find(parent: &mut Vec<usize>, x: usize) -> usize {
        if parent[x] != x {
            let root = find(parent, parent[x]);
            parent[x] = root;
        }
        parent[x]
    }
    let mut first_row = vec![usize::MAX; p.n_blocks];
    for (slot, &b) in p.block_of.iter().enumerate() {
        let r = rs.row_of(slot);
        if first_row[b] == usize::MAX {
            first_row[b] = r;
        } else {
            let (a, c) = (find(&mut parent, first_row[b]), find(&mut parent, r));
            parent[a] = c;
        }
    }
    let root = find(&mut parent, 0);
    (1..m).all(|r| find(&mut parent, r) == root)
}

/// True when every row has at least one slot inside a block of size >= 2.
pub fn every_row_merged(rs: &RowStructure, p: &Partition) -> bool {
    let sizes = p.block_sizes();
    let mut touched = vec![false; rs.m()];
    for (slot, &b) in p.block_of.iter().enumerate() {
        if sizes[b] >= 2 {
            touched[rs.row_of(slot)] = true;
        }
    }
    touched.into_iter().all(|t| t)
}

/// True when no singleton blocks remain.
pub fn all_blocks_merged(p: &Partition) -> bool {
    p.block_sizes().into_iter().all(|s| s >= 2)
}

/// Class sizes of the admissible partitions of a row structure.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct DiagramCensus {
    /// All admissible partitions.
    pub admissible: u64,
    /// Partitions linking all rows into one component.
    pub linked: u64,
    /// Partitions where every row meets a merged block.
    pub covering: u64,
    /// Linked partitions without singleton blocks.
    pub linked_no_singletons: u64,
}

pub fn classify(rs: &RowStructure) -> DiagramCensus {
    let mut census = DiagramCensus::default();
    for_each_partition(rs, |p| {
        census.admissible += 1;
        let linked = links_all_rows(rs, p);
        if linked {
            census.linked += 1;
            if all_blocks_merged(p) {
                census.linked_no_singletons += 1;
            }
        }
        if every_row_merged(rs, p) {
            census.covering += 1;
        }
    });
    census
}

/// A tuple kernel on a finite atom space: `values` holds `k^q` entries in
/// row-major slot order.
#[derive(Clone, Debug, PartialEq)]
pub struct Kernel {
    pub q: usize,
    pub k: usize,
    pub values: Vec<f64>,
}

impl Kernel {
    pub fn new(q: usize, k: usize, values: Vec<f64>) -> Result<Self, DiagramError> {
        if q == 0 || k == 0 || values.len() != k.pow(q as u32) {
            return Err(DiagramError::BadKernel {
                got: values.len(),
                k,
                q,
            });
        }
        Ok(Kernel { q, k, values })
    }

    pub fn eval(&self, atoms: &[usize]) -> f64 {
        debug_assert_eq!(atoms.len(), self.q);
        let mut idx = 0usize;
        for &a in atoms {
            idx = idx * self.k + a;
        }
        self.values[idx]
    }
}

/// Independent atoms with the given mean counts.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteSpaceModel {
    pub intensities: Vec<f64>,
}

impl FiniteSpaceModel {
    pub fn new(intensities: Vec<f64>) -> Result<Self, DiagramError> {
        if intensities.is_empty() || intensities.iter().any(|l| !l.is_finite() || *l <= 0.0) {
            return Err(DiagramError::BadIntensity);
        }
        Ok(FiniteSpaceModel { intensities })
    }

    pub fn k(&self) -> usize {
        self.intensities.len()
    }
}

fn check_inputs(
    model: &FiniteSpaceModel,
    kernels: &[Kernel],
) -> Result<RowStructure, DiagramError> {
    if kernels.is_empty() || kernels.iter().any(|f| f.k != model.k()) {
        return Err(DiagramError::Mismatch);
    }
    RowStructure::new(kernels.iter().map(|f| f.q).collect())
}

/// Collapsed integral of one partition: every block becomes one integration
/// variable, so the weight sums over atom assignments to blocks.
pub fn partition_weight(
    model: &FiniteSpaceModel,
    kernels: &[Kernel],
    rs: &RowStructure,
    p: &Partition,
) -> f64 {
    let k = model.k();
    let mut assign = vec![0usize; p.n_blocks];
    let mut slot_atoms = vec![0usize; rs.total()];
    let mut total = 0.0;
    loop {
        let mut weight = 1.0;
        for &atom in &assign {
            weight *= model.intensities[atom];
        }
        for (slot, &b) in p.block_of.iter().enumerate() {
            slot_atoms[slot] = assign[b];
        }
        let mut offset = 0;
        for (l, f) in kernels.iter().enumerate() {
            let q = rs.rows()[l];
            weight *= f.eval(&slot_atoms[offset..offset + q]);
            offset += q;
        }
        total += weight;
        // Odometer over atom assignments.
        let mut pos = 0;
        loop {
            if pos == assign.len() {
                return total;
            }
            assign[pos] += 1;
            if assign[pos] < k {
                break;
            }
            assign[pos] = 0;
            pos += 1;
        }
    }
}

/// Raw mixed moment of the tuple sums, as a sum over all admissible
/// partitions.
pub fn mixed_moment(model: &FiniteSpaceModel, kernels: &[Kernel]) -> Result<f64, DiagramError> {
    let rs = check_inputs(model, kernels)?;
    let mut total = 0.0;
    for_each_partition(&rs, |p| total += partition_weight(model, kernels, &rs, p));
    Ok(total)
}

/// Mixed central moment: only partitions where every row meets a merged
/// block contribute.
pub fn mixed_central_moment(
    model: &FiniteSpaceModel,
    kernels: &[Kernel],
) -> Result<f64, DiagramError> {
    let rs = check_inputs(model, kernels)?;
    let mut total = 0.0;
    for_each_partition(&rs, |p| {
        if every_row_merged(&rs, p) {
            total += partition_weight(model, kernels, &rs, p);
        }
    });
    Ok(total)
}

/// Joint cumulant: only partitions linking all rows contribute.
pub fn joint_cumulant(model: &FiniteSpaceModel, kernels: &[Kernel]) -> Result<f64, DiagramError> {
    let rs = check_inputs(model, kernels)?;
    let mut total = 0.0;
    for_each_partition(&rs, |p| {
        if links_all_rows(&rs, p) {
            total += partition_weight(model, kernels, &rs, p);
        }
    });
    Ok(total)
}

fn binom(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let mut out = 1.0;
    for i in 0..k {
        out *= (n - i) as f64 / (i + 1) as f64;
    }
    out
}

/// `E[prod_j (N)_{cs[j]}]` for one Poisson count `N` with mean `lambda`,
/// by reducing products of falling factorials to single ones.
fn falling_product_expectation(cs: &[usize], lambda: f64) -> f64 {
    // poly maps falling-factorial degree to coefficient.
    let mut poly = std::collections::HashMap::new();
    poly.insert(0usize, 1.0f64);
    for &c in cs {
        if c == 0 {
            continue;
        }
        let mut next = std::collections::HashMap::new();
        for (&deg, &coef) in &poly {
            for r in 0..=deg.min(c) {
                let mut term = coef * binom(deg, r) * binom(c, r);
                for i in 1..=r {
                    term *= i as f64;
                }
                *next.entry(deg + c - r).or_insert(0.0) += term;
            }
        }
        poly = next;
    }
    poly.iter().map(|(&deg, &coef)| coef * lambda.powi(deg as i32)).sum()
}

/// Raw mixed moment computed without partitions: expand every sum over atom
/// assignments and take falling-factorial expectations atom by atom.
pub fn mixed_moment_oracle(
    model: &FiniteSpaceModel,
    kernels: &[Kernel],
) -> Result<f64, DiagramError> {
    let rs = check_inputs(model, kernels)?;
    let k = model.k();
    let n = rs.total();
    let mut assign = vec![0usize; n];
    let mut total = 0.0;
    loop {
        let mut fval = 1.0;
        let mut offset = 0;
        for (l, f) in kernels.iter().enumerate() {
            fval *= f.eval(&assign[offset..offset + rs.rows()[l]]);
            offset += rs.rows()[l];
        }
        if fval != 0.0 {
            let mut weight = 1.0;
            for (atom, &lambda) in model.intensities.iter().enumerate() {
                // Multiplicity of this atom inside each row's tuple.
                let mut cs = Vec::with_capacity(kernels.len());
                let mut offset = 0;
                for &q in rs.rows() {
                    let c = assign[offset..offset + q].iter().filter(|&&a| a == atom).count();
                    cs.push(c);
                    offset += q;
                }
                weight *= falling_product_expectation(&cs, lambda);
            }
            total += fval * weight;
        }
        let mut pos = 0;
        loop {
            if pos == n {
                return Ok(total);
            }
            assign[pos] += 1;
            if assign[pos] < k {
                break;
            }
            assign[pos] = 0;
            pos += 1;
        }
    }
}

/// Unrestricted set partitions of `{0..m-1}` as block lists.
fn set_partitions(m: usize) -> Vec<Vec<Vec<usize>>> {
    fn recurse(m: usize, next: usize, blocks: &mut Vec<Vec<usize>>, out: &mut Vec<Vec<Vec<usize>>>) {
        if next == m {
            out.push(blocks.clone());
            return;
        }
        for i in 0..blocks.len() {
            blocks[i].push(next);
            recurse(m, next + 1, blocks, out);
            blocks[i].pop();
        }
        blocks.push(vec![next]);
        recurse(m, next + 1, blocks, out);
        blocks.pop();
    }
    let mut out = Vec::new();
    recurse(m, 0, &mut Vec::new(), &mut out);
    out
}

/// Central moment via subset inclusion-exclusion over raw moments.
pub fn central_moment_oracle(
    model: &FiniteSpaceModel,
    kernels: &[Kernel],
) -> Result<f64, DiagramError> {
    check_inputs(model, kernels)?;
    let m = kernels.len();
    let means: Vec<f64> = kernels
        .iter()
        .map(|f| mixed_moment_oracle(model, std::slice::from_ref(f)))
        .collect::<Result<_, _>>()?;
    let mut total = 0.0;
    for mask in 0..(1u32 << m) {
        let subset: Vec<Kernel> = (0..m)
            .filter(|l| mask >> l & 1 == 1)
            .map(|l| kernels[l].clone())
            .collect();
        let raw = if subset.is_empty() {
            1.0
        } else {
            mixed_moment_oracle(model, &subset)?
        };
        let mut term = raw;
        for (l, mean) in means.iter().enumerate() {
            if mask >> l & 1 == 0 {
                term *= -mean;
            }
        }
        total += term;
    }
    Ok(total)
}

/// Joint cumulant via the moments-to-cumulants alternating sum over set
/// partitions of the rows.
pub fn cumulant_oracle(
    model: &FiniteSpaceModel,
    kernels: &[Kernel],
) -> Result<f64, DiagramError> {
    check_inputs(model, kernels)?;
    let mut total = 0.0;
    for sigma in set_partitions(kernels.len()) {
        let b = sigma.len();
        let mut sign = if (b - 1) % 2 == 0 { 1.0 } else { -1.0 };
        for i in 1..b {
            sign *= i as f64;
        }
        let mut prod = 1.0;
        for block in &sigma {
            let sub: Vec<Kernel> = block.iter().map(|&l| kernels[l].clone()).collect();
            prod *= mixed_moment_oracle(model, &sub)?;
        }
        total += sign * prod;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::Rng;

    fn rs(rows: &[usize]) -> RowStructure {
        RowStructure::new(rows.to_vec()).unwrap()
    }

    #[test]
    fn census_matches_hand_counts() {
        let c = classify(&rs(&[1, 1]));
        assert_eq!(c.admissible, 2);
        assert_eq!(c.linked, 1);
        assert_eq!(c.covering, 1);
        assert_eq!(c.linked_no_singletons, 1);

        let c = classify(&rs(&[2, 2]));
        assert_eq!(c.admissible, 7);
        assert_eq!(c.linked, 6);
        assert_eq!(c.covering, 6);
        assert_eq!(c.linked_no_singletons, 2);

        // One row admits only the all-singleton partition.
        let c = classify(&rs(&[3]));
        assert_eq!(c.admissible, 1);
        assert_eq!(c.linked, 1);
        assert_eq!(c.covering, 0);
        assert_eq!(c.linked_no_singletons, 0);
    }

    #[test]
    fn two_row_count_identity() {
        // Blocks in a two-row diagram are singletons or cross pairs, so the
        // total is sum_r C(q1,r) C(q2,r) r!.
        for &(q1, q2) in &[(2usize, 3usize), (3, 3), (1, 4)] {
            let c = classify(&rs(&[q1, q2]));
            let mut want = 0.0;
            for r in 0..=q1.min(q2) {
                let mut term = binom(q1, r) * binom(q2, r);
                for i in 1..=r {
                    term *= i as f64;
                }
                want += term;
            }
            assert_eq!(c.admissible, want as u64, "({q1},{q2})");
        }
    }

    #[test]
    fn linked_partitions_cover_every_row() {
        // With at least two rows, linking all rows forces every row to meet a
        // merged block.
        for rows in [vec![1usize, 2], vec![2, 2], vec![2, 3], vec![1, 1, 2]] {
            let structure = rs(&rows);
            for_each_partition(&structure, |p| {
                if links_all_rows(&structure, p) {
                    assert!(every_row_merged(&structure, p), "{:?}", p.block_of);
                }
            });
        }
    }

    #[test]
    fn partitions_respect_row_constraint() {
        let structure = rs(&[2, 2, 1]);
        let mut seen = std::collections::HashSet::new();
        for_each_partition(&structure, |p| {
            assert!(seen.insert(p.block_of.clone()), "duplicate {:?}", p.block_of);
            for s1 in 0..structure.total() {
                for s2 in (s1 + 1)..structure.total() {
                    if structure.row_of(s1) == structure.row_of(s2) {
                        assert_ne!(p.block_of[s1], p.block_of[s2]);
                    }
                }
            }
        });
    }

    fn two_atom_model() -> FiniteSpaceModel {
        FiniteSpaceModel::new(vec![1.0, 2.0]).unwrap()
    }

    fn linear_kernel() -> Kernel {
        // f(a) = 1, f(b) = 3 on single points.
        Kernel::new(1, 2, vec![1.0, 3.0]).unwrap()
    }

    #[test]
    fn scalar_variance_and_third_cumulant() {
        // S = N_a + 3 N_b with independent mean-1 and mean-2 counts:
        // Var = 1 + 9*2 = 19, third cumulant = 1 + 27*2 = 55.
        let model = two_atom_model();
        let f = linear_kernel();
        let var = mixed_central_moment(&model, &[f.clone(), f.clone()]).unwrap();
        assert_relative_eq!(var, 19.0, epsilon = 1e-12);
        let c3 = joint_cumulant(&model, &[f.clone(), f.clone(), f]).unwrap();
        assert_relative_eq!(c3, 55.0, epsilon = 1e-12);
    }

    #[test]
    fn falling_factorial_reduction() {
        // E[(N)_1 (N)_1] = E[N^2] = lambda^2 + lambda.
        assert_relative_eq!(falling_product_expectation(&[1, 1], 2.0), 6.0);
        // E[(N)_2] = lambda^2.
        assert_relative_eq!(falling_product_expectation(&[2], 2.0), 4.0);
        // E[(N)_2 (N)_1] = lambda^3 + 2 lambda^2.
        assert_relative_eq!(falling_product_expectation(&[2, 1], 3.0), 27.0 + 18.0);
    }

    fn random_kernel(q: usize, k: usize, rng: &mut impl Rng) -> Kernel {
        let values = (0..k.pow(q as u32)).map(|_| rng.gen::<f64>()).collect();
        Kernel::new(q, k, values).unwrap()
    }

    #[test]
    fn partition_formulas_match_factorial_algebra() {
        let mut rng = crate::rng::stream_rng(41, &[crate::rng::tag::CHECK]);
        let model = FiniteSpaceModel::new(vec![0.7, 1.3, 0.4]).unwrap();
        for rows in [vec![1usize, 2], vec![2, 2], vec![1, 1, 2], vec![2, 3]] {
            let kernels: Vec<Kernel> =
                rows.iter().map(|&q| random_kernel(q, 3, &mut rng)).collect();
            let lhs = mixed_moment(&model, &kernels).unwrap();
            let rhs = mixed_moment_oracle(&model, &kernels).unwrap();
            assert_relative_eq!(lhs, rhs, max_relative = 1e-10);

            let lhs = mixed_central_moment(&model, &kernels).unwrap();
            let rhs = central_moment_oracle(&model, &kernels).unwrap();
            assert_relative_eq!(lhs, rhs, max_relative = 1e-9, epsilon = 1e-12);

            let lhs = joint_cumulant(&model, &kernels).unwrap();
            let rhs = cumulant_oracle(&model, &kernels).unwrap();
            assert_relative_eq!(lhs, rhs, max_relative = 1e-9, epsilon = 1e-12);
        }
    }

    #[test]
    fn single_row_degenerate_cases() {
        let model = two_atom_model();
        let f = random_kernel(2, 2, &mut crate::rng::stream_rng(42, &[crate::rng::tag::CHECK]));
        // One sum: central moment vanishes, cumulant equals the mean.
        let central = mixed_central_moment(&model, std::slice::from_ref(&f)).unwrap();
        assert_relative_eq!(central, 0.0, epsilon = 1e-14);
        let mean = mixed_moment(&model, std::slice::from_ref(&f)).unwrap();
        let cum = joint_cumulant(&model, std::slice::from_ref(&f)).unwrap();
        assert_relative_eq!(cum, mean, max_relative = 1e-12);
    }

    #[test]
    fn input_validation() {
        assert!(RowStructure::new(vec![]).is_err());
        assert!(RowStructure::new(vec![7]).is_err());
        assert!(RowStructure::new(vec![4, 4, 4, 1]).is_err());
        assert!(Kernel::new(2, 2, vec![0.0; 3]).is_err());
        assert!(FiniteSpaceModel::new(vec![1.0, 0.0]).is_err());
        let model = two_atom_model();
        let bad = Kernel::new(1, 3, vec![1.0; 3]).unwrap();
        assert!(mixed_moment(&model, &[bad]).is_err());
    }
}
