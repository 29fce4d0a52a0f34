//! Built-in problem instances: closed-form tensor families and literal
//! data sets used by the examples and regression tests.
//!
//! Formula families take one-based indices, matching how they are usually
//! written down.

use crate::tensor::{Tensor, TensorPair};

/// Named closed-form tensor families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    /// Ones on the superdiagonal.
    Identity,
    /// `(-1)^j / i + (-1)^k / j + (-1)^i / k` (third order only).
    AlternatingHarmonic,
    /// `(Σ_j (-1)^{j+1} exp(i_j))^{-1}`.
    ExpAlternating,
    /// `arctan(i_1 i_2 ⋯ i_m)`.
    ArctanProduct,
    /// `tan(i_1) + ⋯ + tan(i_m)`.
    TanSum,
    /// `(1 + Σ_j j·i_j)^{-1}`.
    InverseLinear,
    /// `tan(i - j/2 + k/3)` (third order only).
    TanShift,
    /// `(Σ_j j·i_j − sqrt(Σ_j j·i_j²)) / 10`.
    LinearRoot,
}

impl Family {
    pub const ALL: [Family; 8] = [
        Family::Identity,
        Family::AlternatingHarmonic,
        Family::ExpAlternating,
        Family::ArctanProduct,
        Family::TanSum,
        Family::InverseLinear,
        Family::TanShift,
        Family::LinearRoot,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Identity => "identity",
            Family::AlternatingHarmonic => "alternating-harmonic",
            Family::ExpAlternating => "exp-alternating",
            Family::ArctanProduct => "arctan-product",
            Family::TanSum => "tan-sum",
            Family::InverseLinear => "inverse-linear",
            Family::TanShift => "tan-shift",
            Family::LinearRoot => "linear-root",
        }
    }

    pub fn from_name(name: &str) -> Option<Family> {
        Family::ALL.into_iter().find(|f| f.name() == name)
    }

    /// Materialize the family at order `m`, dimension `n`. Returns `None` when
    /// the family is only defined for a different order.
    pub fn tensor(self, m: usize, n: usize) -> Option<Tensor> {
        let third_order_only = matches!(self, Family::AlternatingHarmonic | Family::TanShift);
        if third_order_only && m != 3 {
            return None;
        }
        let t = Tensor::from_fn(m, n, |idx| {
            let one: Vec<f64> = idx.iter().map(|&i| (i + 1) as f64).collect();
            match self {
                Family::Identity => {
                    if idx.iter().all(|&i| i == idx[0]) {
                        1.0
                    } else {
                        0.0
                    }
                }
                Family::AlternatingHarmonic => {
                    let (i, j, k) = (one[0], one[1], one[2]);
                    sign(j) / i + sign(k) / j + sign(i) / k
                }
                Family::ExpAlternating => {
                    let s: f64 = one
                        .iter()
                        .enumerate()
                        .map(|(p, v)| if p % 2 == 0 { v.exp() } else { -v.exp() })
                        .sum();
                    1.0 / s
                }
                Family::ArctanProduct => one.iter().product::<f64>().atan(),
                Family::TanSum => one.iter().map(|v| v.tan()).sum(),
                Family::InverseLinear => {
                    let s: f64 = one.iter().enumerate().map(|(p, v)| (p + 1) as f64 * v).sum();
                    1.0 / (1.0 + s)
                }
                Family::TanShift => (one[0] - one[1] / 2.0 + one[2] / 3.0).tan(),
                Family::LinearRoot => {
                    let lin: f64 = one.iter().enumerate().map(|(p, v)| (p + 1) as f64 * v).sum();
                    let norm = one.iter().enumerate().map(|(p, v)| (p + 1) as f64 * v * v).sum::<f64>().sqrt();
                    (lin - norm) / 10.0
                }
            }
        });
        t.ok()
    }
}

fn sign(i: f64) -> f64 {
    if (i as i64) % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

pub fn alternating_harmonic(m: usize, n: usize) -> Tensor {
    Family::AlternatingHarmonic.tensor(m, n).expect("third order")
}

/// Fourth-order, two-dimensional pair with all-positive `B`.
pub fn ling_2x4() -> TensorPair {
    pair(4, 2, &LING_2X4_A, &LING_2X4_B)
}

/// Fourth-order, three-dimensional pair with all-positive `B`.
pub fn ling_3x4() -> TensorPair {
    pair(4, 3, &LING_3X4_A, &LING_3X4_B)
}

/// Third-order, five-dimensional pair with Gaussian-looking entries.
pub fn random_5x3() -> TensorPair {
    pair(3, 5, &RANDOM_5X3_A, &RANDOM_5X3_B)
}

/// Sixth-order, four-dimensional symmetric `A` with `B = I`.
pub fn chen_6x4() -> TensorPair {
    let a = symmetric_from_upper(6, 4, CHEN_6X4_UPPER.iter().map(|&(k, v)| (parse_digits(k), v)));
    TensorPair::new(a, Tensor::identity(6, 4)).expect("shapes agree")
}

/// `(alternating-harmonic, I)`, third order.
pub fn alternating_pair(n: usize) -> TensorPair {
    TensorPair::new(alternating_harmonic(3, n), Tensor::identity(3, n)).unwrap()
}

/// `(exp-alternating, I)`, fifth order.
pub fn exp_pair(n: usize) -> TensorPair {
    TensorPair::new(Family::ExpAlternating.tensor(5, n).unwrap(), Tensor::identity(5, n)).unwrap()
}

/// `(tan-shift, alternating-harmonic)`, third order.
pub fn tan_alternating_pair(n: usize) -> TensorPair {
    TensorPair::new(Family::TanShift.tensor(3, n).unwrap(), alternating_harmonic(3, n)).unwrap()
}

/// `(linear-root, arctan-product)`, fourth order.
pub fn arctan_pair(n: usize) -> TensorPair {
    TensorPair::new(
        Family::LinearRoot.tensor(4, n).unwrap(),
        Family::ArctanProduct.tensor(4, n).unwrap(),
    )
    .unwrap()
}

/// `(inverse-linear, tan-sum)`, fourth order.
pub fn tan_sum_pair(n: usize) -> TensorPair {
    TensorPair::new(
        Family::InverseLinear.tensor(4, n).unwrap(),
        Family::TanSum.tensor(4, n).unwrap(),
    )
    .unwrap()
}

/// Seeded symmetric tensor: standard normal entries, or uniform on
/// `[0.5, 1.5]` (hence entrywise positive) when `positive` is set.
pub fn random_symmetric(m: usize, n: usize, seed: u64, positive: bool) -> Tensor {
    use rand::{Rng, SeedableRng};
    use rand_distr::StandardNormal;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let entries: Vec<(Vec<usize>, f64)> = nondecreasing(m, n)
        .into_iter()
        .map(|idx| {
            let v = if positive { rng.random_range(0.5..1.5) } else { rng.sample(StandardNormal) };
            (idx, v)
        })
        .collect();
    symmetric_from_upper(m, n, entries)
}

/// Seeded symmetric pair with Gaussian `A` and entrywise positive `B`.
pub fn random_positive_pair(m: usize, n: usize, seed: u64) -> TensorPair {
    let a = random_symmetric(m, n, seed, false);
    let b = random_symmetric(m, n, seed.wrapping_add(1), true);
    TensorPair::new(a, b).expect("shapes agree")
}

/// Nondecreasing zero-based index tuples of length `m` over `0..n`, in lexicographic order.
pub fn nondecreasing(m: usize, n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut idx = vec![0usize; m];
    if n == 0 {
        return out;
    }
    loop {
        out.push(idx.clone());
        let Some(p) = (0..m).rev().find(|&p| idx[p] + 1 < n) else { return out };
        let v = idx[p] + 1;
        idx[p..].iter_mut().for_each(|e| *e = v);
    }
}

fn pair(m: usize, n: usize, a: &[f64], b: &[f64]) -> TensorPair {
    TensorPair::new(
        Tensor::new(m, n, a.to_vec()).expect("literal data is well-formed"),
        Tensor::new(m, n, b.to_vec()).expect("literal data is well-formed"),
    )
    .expect("shapes agree")
}

fn parse_digits(key: &str) -> Vec<usize> {
    key.bytes().map(|b| (b - b'1') as usize).collect()
}

/// Expand `(zero-based nondecreasing index, value)` entries to a full
/// symmetric tensor; unlisted orbits are zero.
pub fn symmetric_from_upper(
    m: usize,
    n: usize,
    entries: impl IntoIterator<Item = (Vec<usize>, f64)>,
) -> Tensor {
    let mut table = std::collections::HashMap::new();
    for (mut idx, v) in entries {
        idx.sort_unstable();
        table.insert(idx, v);
    }
    let mut key = vec![0usize; m];
    Tensor::from_fn(m, n, |idx| {
        key.copy_from_slice(idx);
        key.sort_unstable();
        table.get(&key).copied().unwrap_or(0.0)
    })
    .expect("symmetric expansion is well-formed")
}

pub(crate) const LING_2X4_A: [f64; 16] = [
    0.8147, 0.4218, 0.4218, 0.6787, 0.5164, 0.854, 0.854, 0.7504,
    0.5164, 0.854, 0.854, 0.7504, 0.9134, 0.9595, 0.9595, 0.3922,
];
pub(crate) const LING_2X4_B: [f64; 16] = [
    1.6324, 1.6557, 1.6557, 1.6555, 1.188, 1.4424, 1.4424, 1.4386,
    1.188, 1.4424, 1.4424, 1.4386, 1.5469, 1.934, 1.934, 1.0318,
];
pub(crate) const LING_3X4_A: [f64; 81] = [
    0.6229, 0.7563, 0.0657, 0.7563, 0.7689, 0.8077, 0.0657, 0.8077,
    0.7581, 0.2644, 0.5878, 0.4918, 0.5878, 0.3941, 0.491, 0.4918,
    0.491, 0.7205, 0.3567, 0.5406, 0.9312, 0.5406, 0.6034, 0.2953,
    0.9312, 0.2953, 0.9044, 0.2644, 0.5878, 0.4918, 0.5878, 0.3941,
    0.491, 0.4918, 0.491, 0.7205, 0.0475, 0.1379, 0.7788, 0.1379,
    0.3577, 0.5054, 0.7788, 0.5054, 0.0782, 0.7367, 0.0715, 0.9045,
    0.0715, 0.3465, 0.5556, 0.9045, 0.5556, 0.724, 0.3567, 0.5406,
    0.9312, 0.5406, 0.6034, 0.2953, 0.9312, 0.2953, 0.9044, 0.7367,
    0.0715, 0.9045, 0.0715, 0.3465, 0.5556, 0.9045, 0.5556, 0.724,
    0.1259, 0.3725, 0.8711, 0.3725, 0.4516, 0.9608, 0.8711, 0.9608,
    0.3492,
];
pub(crate) const LING_3X4_B: [f64; 81] = [
    0.6954, 0.673, 0.7585, 0.673, 0.3608, 0.4632, 0.7585, 0.4632,
    0.82, 0.4018, 0.5351, 0.6433, 0.5351, 0.3914, 0.2043, 0.6433,
    0.2043, 0.5914, 0.1406, 0.4473, 0.2306, 0.4473, 0.523, 0.2823,
    0.2306, 0.2823, 0.4983, 0.4018, 0.5351, 0.6433, 0.5351, 0.3914,
    0.2043, 0.6433, 0.2043, 0.5914, 0.9957, 0.2853, 0.8986, 0.2853,
    0.6822, 0.7282, 0.8986, 0.7282, 0.0762, 0.0483, 0.3071, 0.3427,
    0.3071, 0.5516, 0.74, 0.3427, 0.74, 0.2854, 0.1406, 0.4473,
    0.2306, 0.4473, 0.523, 0.2823, 0.2306, 0.2823, 0.4983, 0.0483,
    0.3071, 0.3427, 0.3071, 0.5516, 0.74, 0.3427, 0.74, 0.2854,
    0.0988, 0.9665, 0.539, 0.9665, 0.7091, 0.9369, 0.539, 0.9369,
    0.1266,
];
pub(crate) const RANDOM_5X3_A: [f64; 125] = [
    0.0195, 1.0276, -0.5525, 0.4575, 2.0504, -0.8385, -1.0345, -0.2713,
    0.3137, 0.4528, -0.5971, -0.6651, -0.363, 0.4335, -1.7698, -0.9968,
    -0.7659, 0.835, 0.9388, -2.5073, 0.8617, 0.1898, -0.0891, 0.0927,
    -0.1142, 1.2397, 0.3746, 0.2359, -0.0042, -0.0395, 1.819, 0.6527,
    -1.8207, 1.6425, 0.346, 0.3261, -1.1189, 0.6906, 0.8085, -0.1017,
    -1.0365, 0.8586, -1.7055, -1.5722, -1.5303, -0.6295, 0.8419, -1.2772,
    -0.9639, 0.1027, -0.1187, 0.8412, 2.0821, -0.1085, -0.4152, 0.2297,
    0.8611, -1.3487, -0.0514, -1.2332, 1.5407, 0.0405, -0.4501, -1.3662,
    -0.1069, -1.0985, -0.3752, 0.8657, 0.3091, -1.244, 0.1256, -0.2802,
    1.4453, -3.1922, 1.6888, 1.3101, 0.0881, -0.7056, -1.2807, -0.8989,
    -0.9982, -1.3853, 0.2588, -0.2399, -0.3438, 1.1868, 1.8775, -0.5409,
    -1.118, -2.5825, 0.2386, 0.2183, -0.6727, -1.2672, -0.4245, 2.4171,
    0.1735, -1.7967, 0.2671, -0.8625, 1.4264, 0.7881, 0.7374, -1.0279,
    -1.6842, 2.4354, 0.59, 0.3692, -0.9839, -0.7582, -0.4358, 0.0509,
    -0.8594, -0.3586, -1.7254, -1.4201, -0.775, 0.7489, 0.7765, -0.1353,
    0.5474, 0.0494, 0.3929, 0.4211, -0.0564,
];
pub(crate) const RANDOM_5X3_B: [f64; 125] = [
    0.1278, 0.1286, 0.4473, -0.4009, -0.3332, -1.2405, 0.5255, 0.8023,
    0.8938, 0.3925, -1.5521, 0.3809, 2.1941, 0.5559, 1.5851, -0.3097,
    0.1088, 1.7633, 0.8235, -0.2666, 0.4371, -1.2674, -2.01, 0.3279,
    -0.4003, 1.0476, 0.2852, 0.8716, -0.9912, 0.8811, -1.1941, -1.1047,
    0.1619, 0.3709, 0.4142, -0.1954, -0.832, 0.0832, 0.438, -0.7639,
    -1.3133, 0.9058, 1.0375, -0.2003, 0.6644, 0.3712, -2.3433, 1.0234,
    -0.4898, 0.0389, -0.8638, -1.5964, -0.4001, -0.5454, 0.4362, 0.4681,
    0.3327, 1.0824, 2.6579, 0.3792, 0.109, 0.1657, 0.4427, 1.1804,
    1.5087, 0.8267, 0.2164, 1.6162, 1.3327, -0.622, -0.7007, 0.4927,
    0.1706, -0.299, -0.4257, -1.6955, -0.9393, -0.2331, 0.598, 2.3515,
    1.0037, -0.9674, 0.2375, 1.1167, -0.7528, 0.9138, -0.4843, -0.0875,
    0.6838, 0.9182, -0.0934, 0.4749, -0.5156, -0.4269, -1.3888, -0.1997,
    0.472, -1.0727, 0.2665, 0.0862, -0.511, -0.6881, 0.6626, 0.7989,
    0.8837, -0.2755, 1.7844, 0.1542, -0.5784, -0.6053, -0.8768, 2.0353,
    0.3014, -1.1768, 2.6629, -0.3897, 0.5464, 1.1429, -1.1067, -1.9644,
    -0.2546, 0.758, -0.1337, 0.185, -0.9562,
];
pub(crate) const CHEN_6X4_UPPER: [(&str, f64); 84] = [
    ("111111", 0.5000), ("111112", -0.2369), ("111113", 0.1953), ("111114", -0.2691),
    ("111122", 0.0835), ("111123", -0.2016), ("111124", -0.0441), ("111133", 0.0567),
    ("111134", -0.2784), ("111144", 0.2321), ("111222", -0.1250), ("111223", 0.0333),
    ("111224", 0.0235), ("111233", 0.0093), ("111234", -0.0304), ("111244", -0.0167),
    ("111333", 0.1028), ("111334", -0.0385), ("111344", 0.0068), ("111444", 0.1627),
    ("112222", -0.1002), ("112223", 0.0733), ("112224", 0.0607), ("112233", -0.1125),
    ("112234", 0.0096), ("112244", -0.0810), ("112333", -0.0299), ("112334", 0.0153),
    ("112344", 0.0572), ("112444", 0.0251), ("113333", 0.1927), ("113334", -0.1024),
    ("113344", -0.0885), ("113444", 0.0289), ("114444", -0.0668), ("122222", -0.2707),
    ("122223", -0.1066), ("122224", -0.1592), ("122233", 0.0805), ("122234", -0.0540),
    ("122244", -0.0434), ("122333", -0.0048), ("122334", -0.0118), ("122344", 0.0196),
    ("122444", -0.0585), ("123333", -0.0442), ("123334", -0.0618), ("123344", 0.0318),
    ("123444", 0.0332), ("124444", -0.2490), ("133333", 0.1291), ("133334", 0.0704),
    ("133344", -0.0032), ("133444", 0.0270), ("134444", 0.0232), ("144444", -0.3403),
    ("222222", -0.6637), ("222223", 0.2191), ("222224", 0.3280), ("222233", 0.1834),
    ("222234", 0.0627), ("222244", 0.0860), ("222333", 0.1590), ("222334", -0.0217),
    ("222344", 0.1198), ("222444", -0.1674), ("223333", 0.0549), ("223334", -0.0868),
    ("223344", 0.0043), ("223444", 0.0101), ("224444", -0.0307), ("233333", -0.3553),
    ("233334", 0.0207), ("233344", 0.1544), ("233444", -0.1707), ("234444", -0.3557),
    ("244444", -0.1706), ("333333", 0.7354), ("333334", -0.3628), ("333344", -0.2650),
    ("333444", -0.0479), ("334444", -0.0084), ("344444", -0.0559), ("444444", 0.6136),
];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn family_values() {
        let t = Family::AlternatingHarmonic.tensor(3, 3).unwrap();
        assert_eq!(t.get(&[0, 0, 0]), -3.0);
        assert_eq!(t.get(&[2, 2, 2]), -1.0);
        let inv = Family::InverseLinear.tensor(4, 2).unwrap();
        assert!((inv.get(&[0, 0, 0, 0]) - 1.0 / 11.0).abs() < 1e-15);
        assert!(Family::TanShift.tensor(4, 2).is_none());
        for f in Family::ALL {
            assert_eq!(Family::from_name(f.name()), Some(f));
        }
    }

    #[test]
    fn literal_data_symmetry() {
        assert!(ling_2x4().b.entrywise_positive());
        assert!(ling_3x4().b.entrywise_positive());
        let c = chen_6x4();
        assert!(c.a.is_symmetric());
        assert_eq!(c.a.get(&[0, 0, 0, 0, 0, 1]), -0.2369);
        assert_eq!(c.a.get(&[1, 0, 0, 0, 0, 0]), -0.2369);
    }
}
