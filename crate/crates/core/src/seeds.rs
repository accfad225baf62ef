//! Built-in starting codes and their partitions.

use crate::code::{Claims, CodeError, CodeRecord, ParityCheckMatrix, Partition, Provenance};
use crate::gf2m::FieldContext;

const M_KR: [u64; 41] = [
    0x1B6, 0x193, 0x1CC, 0x187, 0x1F6, 0xF7, 0x16E, 0x140, 0x3C, 0x296, 0x22F, 0x303, 0x381, 0x365, 0x11D,
    0x1A3, 0x274, 0x2F2, 0x254, 0x56, 0xF, 0x41, 0x357, 0x208, 0x34, 0x329, 0x28D, 0x31D, 0x3D5, 0x129, 0x3D7,
    0xB7, 0x3EC, 0x2E2, 0x23C, 0xAD, 0x34E, 0x155, 0x2E6, 0x371, 0xD4,
];

const P_KR: [&[usize]; 11] = [
    &[5, 13, 43],
    &[20, 27],
    &[3, 29, 33, 39, 41, 48, 51],
    &[1, 7, 19, 25, 34, 45],
    &[2, 4, 18],
    &[6, 8, 12, 26, 28, 35, 44],
    &[9, 22, 23, 30],
    &[10, 11, 15, 16, 32, 42],
    &[14, 24, 49, 50],
    &[17, 21, 31, 37, 46, 47],
    &[36, 38, 40],
];

const P_KR_STAR: [&[usize]; 16] = [
    &[5],
    &[27],
    &[29],
    &[13],
    &[43],
    &[20],
    &[3],
    &[33, 39, 41, 48, 51],
    &[1, 7, 19, 25, 34, 45],
    &[2, 4, 18],
    &[6, 8, 12, 26, 28, 35, 44],
    &[9, 22, 23, 30],
    &[10, 11, 15, 16, 32, 42],
    &[14, 24, 49, 50],
    &[17, 21, 31, 37, 46, 47],
    &[36, 38, 40],
];

/// Columns of `P_KR` pinned to singletons when refining it into `P_KR*`.
pub const KR_STAR_PINS: [usize; 7] = [5, 27, 29, 13, 43, 20, 3];

const M_OK: [u64; 9] = [0x1A0, 0x174, 0xA5, 0x173, 0x17, 0xE8, 0x9, 0x18D, 0x1CE];

const P_OK: [&[usize]; 11] = [
    &[1, 2, 4],
    &[3],
    &[5, 8],
    &[6, 17],
    &[7, 10],
    &[11, 14],
    &[12],
    &[13, 18],
    &[15],
    &[9],
    &[16],
];

const M_OK2: [u64; 8] = [0x4EA, 0x771, 0x6, 0x86, 0x1CD, 0x3B4, 0x17E, 0x7AB];

/// Columns of the `[19,8]` code summing to zero, 1-based.
pub const OK2_ZERO_TRIPLE: [usize; 3] = [9, 10, 14];

fn seed(name: &str, citation: &str) -> Provenance {
    Provenance::Seed { name: name.into(), citation: citation.into() }
}

/// All nonzero `m`-bit columns in ascending order.
pub fn hamming_matrix(m: u32) -> ParityCheckMatrix {
    ParityCheckMatrix::new(m, (1..1u64 << m).collect()).expect("m in 1..=63")
}

/// The Hamming matrix with one nonzero column removed.
pub fn hamming_without(m: u32, w: u64) -> ParityCheckMatrix {
    ParityCheckMatrix::new(m, (1..1u64 << m).filter(|&c| c != w).collect()).expect("m >= 2")
}

pub fn hamming_code(m: u32) -> CodeRecord {
    let claims = Claims { radius: 1, min_distance: Some(3), ell: 0 };
    let mut rec = CodeRecord::from_matrix(
        &format!("hamming{m}"),
        hamming_matrix(m),
        claims,
        seed("hamming", "perfect single-error-correcting code"),
    )
    .expect("consistent claims");
    let n = rec.n as usize;
    rec.add_partition("trivial", Partition::trivial(n, 1, 0).unwrap()).unwrap();
    rec
}

/// The `[51,41]` code with covering radius 2 and its two partitions.
pub fn kr_code() -> CodeRecord {
    let h = ParityCheckMatrix::identity_prefixed(10, &M_KR).unwrap();
    let claims = Claims { radius: 2, min_distance: Some(3), ell: 0 };
    let mut rec =
        CodeRecord::from_matrix("kr", h, claims, seed("kr", "[51,41] code of covering radius 2, ADS-like")).unwrap();
    let (p, p_star) = kr_partitions();
    rec.add_partition("trivial", Partition::trivial(51, 2, 0).unwrap()).unwrap();
    rec.add_partition("pkr", p).unwrap();
    rec.add_partition("pkr-star", p_star).unwrap();
    rec
}

/// `P_KR` (11 subsets) and its refinement `P_KR*` (16 subsets).
pub fn kr_partitions() -> (Partition, Partition) {
    (
        Partition::from_one_based(&P_KR, 51, 2, 0).unwrap(),
        Partition::from_one_based(&P_KR_STAR, 51, 2, 0).unwrap(),
    )
}

/// The `[18,9]` code with `R = 3`, `ℓ = 1` and its 11-subset partition.
pub fn ok_code() -> CodeRecord {
    let h = ParityCheckMatrix::identity_prefixed(9, &M_OK).unwrap();
    let claims = Claims { radius: 3, min_distance: None, ell: 1 };
    let mut rec = CodeRecord::from_matrix("ok", h, claims, seed("ok", "[18,9] code of covering radius 3")).unwrap();
    rec.add_partition("trivial", Partition::trivial(18, 3, 1).unwrap()).unwrap();
    rec.add_partition("pok", ok_partition()).unwrap();
    rec
}

pub fn ok_partition() -> Partition {
    Partition::from_one_based(&P_OK, 18, 3, 1).unwrap()
}

/// The `[19,8]` code with `R = 4` and `ℓ = 1` on the trivial partition.
pub fn ok2_code() -> CodeRecord {
    let h = ParityCheckMatrix::identity_prefixed(11, &M_OK2).unwrap();
    let claims = Claims { radius: 4, min_distance: Some(3), ell: 1 };
    let mut rec = CodeRecord::from_matrix("ok2", h, claims, seed("ok2", "[19,8] code of covering radius 4")).unwrap();
    rec.add_partition("trivial", Partition::trivial(19, 4, 1).unwrap()).unwrap();
    rec
}

/// Columns `x^i mod g(x)` of the binary Golay code, `g` the generator of the
/// quadratic-residue code of length 23.
pub fn golay_matrix() -> ParityCheckMatrix {
    let f = FieldContext::with_default_poly(11).unwrap();
    // 2047 = 23 * 89, so x^89 has order 23 unless it is 1
    let beta = (2..f.size()).map(|x| f.pow(x, 89)).find(|&b| b != 1).expect("element of order 23");
    let residues: Vec<u32> = {
        let mut v: Vec<u32> = (1..23u32).map(|x| x * x % 23).collect();
        v.sort_unstable();
        v.dedup();
        v
    };
    // g(x) = prod (x + beta^i), coefficients low degree first
    let mut g: Vec<u32> = vec![1];
    for &i in &residues {
        let root = f.pow(beta, i);
        let mut next = vec![0u32; g.len() + 1];
        for (k, &c) in g.iter().enumerate() {
            next[k + 1] ^= c;
            next[k] ^= f.mul(c, root);
        }
        g = next;
    }
    let gpoly = g.iter().enumerate().fold(0u64, |acc, (k, &c)| {
        assert!(c <= 1, "generator has binary coefficients");
        acc | (c as u64) << k
    });
    let cols = (0..23u32)
        .map(|i| {
            let mut x = 1u64 << i;
            while x >> 11 != 0 {
                let d = 63 - x.leading_zeros();
                x ^= gpoly << (d - 11);
            }
            x
        })
        .collect();
    ParityCheckMatrix::new(11, cols).unwrap()
}

/// The perfect `[23,12,7]` code with `R = 3`.
pub fn golay_code() -> CodeRecord {
    let claims = Claims { radius: 3, min_distance: Some(7), ell: 0 };
    let mut rec =
        CodeRecord::from_matrix("golay", golay_matrix(), claims, seed("golay", "binary Golay code, QR construction"))
            .unwrap();
    rec.add_partition("trivial", Partition::trivial(23, 3, 0).unwrap()).unwrap();
    rec
}

/// Names accepted by [`seed_by_name`].
pub const SEED_NAMES: [&str; 6] = ["kr", "ok", "ok2", "golay", "hamming3", "hamming4"];

pub fn seed_by_name(name: &str) -> Option<CodeRecord> {
    Some(match name {
        "kr" => kr_code(),
        "ok" => ok_code(),
        "ok2" => ok2_code(),
        "golay" => golay_code(),
        "hamming3" => hamming_code(3),
        "hamming4" => hamming_code(4),
        _ => return None,
    })
}

/// Builds a record from an external matrix file and claimed parameters.
pub fn import_external(
    name: &str,
    matrix_text: &str,
    claims: Claims,
    partitions: &[(String, String)],
    source: &str,
) -> Result<CodeRecord, CodeError> {
    let h = ParityCheckMatrix::parse_hex(matrix_text)?;
    let mut rec = CodeRecord::from_matrix(name, h, claims, Provenance::Imported { source: source.into() })?;
    let n = rec.n as usize;
    rec.add_partition("trivial", Partition::trivial(n, rec.claims.radius, rec.claims.ell)?)?;
    for (pname, text) in partitions {
        let p = Partition::parse(text)?;
        rec.add_partition(pname, p)?;
    }
    Ok(rec)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shapes() {
        assert_eq!(kr_code().n, 51);
        assert_eq!(ok_code().n, 18);
        assert_eq!(ok2_code().n, 19);
        assert_eq!(golay_code().n, 23);
        let h = ok2_code().matrix.unwrap();
        let z = OK2_ZERO_TRIPLE.iter().fold(0, |a, &i| a ^ h.col(i - 1));
        assert_eq!(z, 0);
    }

    #[test]
    fn golay_is_systematic_and_distinct() {
        let h = golay_matrix();
        for i in 0..11 {
            assert_eq!(h.col(i), 1 << i);
        }
        let mut c = h.columns().to_vec();
        c.sort_unstable();
        c.dedup();
        assert_eq!(c.len(), 23);
    }
}
