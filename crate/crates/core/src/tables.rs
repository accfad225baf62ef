//! Length bounds, improvement sizes, the stored comparison tables and the
//! construction chains that produce the new rows.

use std::collections::HashMap;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::code::density;
use crate::construct::{self, CodeNode, ConstructError, ConstructionSpec, QmCode, TableCode, Variant};
use crate::seeds;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TableError {
    #[error("{bound:?} is not defined at r={r}")]
    Domain { bound: Bound, r: u32 },
    #[error("no improvement is recorded for r={r}, R={radius}")]
    NotNew { r: u32, radius: u32 },
    #[error("no stored table for R={0}")]
    NoTable(u32),
    #[error("unknown code {0} in a chain step")]
    Missing(String),
    #[error("{0}")]
    Construct(#[from] ConstructError),
    #[error("{0}")]
    Node(String),
}

/// Closed-form length bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Bound {
    /// Known even-`r` family for `R = 2`, `27·2^{r/2-4} - 1`.
    SmallPhi,
    /// Known odd-`r` family for `R = 2`, `5·2^{(r-3)/2} - 1`.
    F,
    /// New `R = 2` family, `26·2^{r/2-4} - 1`.
    Phi,
    /// New sporadic `R = 2` values, `26.5·2^{r/2-4} - 3`.
    PhiHat,
    /// Known `R = 3` family, `3·2^{(r-1)/3} - 1`.
    Varphi,
    /// Known `R = 3` family, `821·2^{(r-26)/3} - 1`.
    Gamma,
    /// Known `R = 3` family, `144·2^{(r-18)/3} - 1`.
    Psi,
    /// New `R = 3` family, `819·2^{(r-26)/3} - 1`.
    Upsilon,
    /// New sporadic `R = 3` values, `820·2^{(r-26)/3} - 2`.
    UpsilonHat,
    /// Known `R = 3`, `1024·2^{(r-26)/3} - 1`.
    Known3a,
    /// Known `R = 3`, `822·2^{(r-26)/3} - 2`.
    Known3b,
    /// Known `R = 3`, `155·2^{(r-18)/3} - 2`.
    Known3c,
    /// Known `R = 3`, `152·2^{(r-18)/3} - 1`.
    Known3d,
    /// Known `R = 4` family, `2944·2^{r/4-10} - 2`.
    Fam4Known,
    /// New `R = 4` family, `2943·2^{r/4-10} - 1`.
    Fam4New,
    /// New sporadic `R = 4` values, `2944·2^{r/4-10} - 3`.
    Fam4Sporadic,
}

const BOUND_NAMES: [(&str, Bound); 16] = [
    ("phi", Bound::SmallPhi),
    ("f", Bound::F),
    ("Phi", Bound::Phi),
    ("PhiHat", Bound::PhiHat),
    ("varphi", Bound::Varphi),
    ("gamma", Bound::Gamma),
    ("psi", Bound::Psi),
    ("Upsilon", Bound::Upsilon),
    ("UpsilonHat", Bound::UpsilonHat),
    ("known3a", Bound::Known3a),
    ("known3b", Bound::Known3b),
    ("known3c", Bound::Known3c),
    ("known3d", Bound::Known3d),
    ("fam4_known", Bound::Fam4Known),
    ("fam4_new", Bound::Fam4New),
    ("fam4_sporadic", Bound::Fam4Sporadic),
];

impl std::str::FromStr for Bound {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        BOUND_NAMES.iter().find(|(n, _)| *n == s).map(|&(_, b)| b).ok_or_else(|| {
            let names: Vec<&str> = BOUND_NAMES.iter().map(|(n, _)| *n).collect();
            format!("unknown bound {s}; expected one of {}", names.join(", "))
        })
    }
}

impl std::fmt::Display for Bound {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = BOUND_NAMES.iter().find(|(_, b)| b == self).map_or("?", |(n, _)| n);
        f.write_str(name)
    }
}

/// `c·2^e - sub` when it is an integer.
fn scaled(c: u64, e: i64, sub: u64) -> Option<u64> {
    let v = if e >= 0 {
        c.checked_shl(e as u32)?
    } else {
        let s = (-e) as u32;
        if s >= 64 || c % (1u64 << s) != 0 {
            return None;
        }
        c >> s
    };
    v.checked_sub(sub)
}

pub fn eval_bound(bound: Bound, r: u32) -> Result<u64, TableError> {
    use Bound::*;
    let ri = r as i64;
    let even = r % 2 == 0;
    let val = match bound {
        SmallPhi if even && r >= 8 => scaled(27, ri / 2 - 4, 1),
        F if !even && r >= 3 => scaled(5, (ri - 3) / 2, 1),
        Phi if matches!(r, 10 | 18 | 20) || (even && r >= 28) => scaled(26, ri / 2 - 4, 1),
        PhiHat if matches!(r, 22 | 24 | 26) => scaled(53, ri / 2 - 5, 3),
        Varphi if r % 3 == 1 && (r >= 22 || matches!(r, 4 | 7 | 16)) => scaled(3, (ri - 1) / 3, 1),
        Gamma if r % 3 == 2 && r >= 41 => scaled(821, (ri - 26) / 3, 1),
        Psi if r % 3 == 0 && (r >= 30 || r == 15) => scaled(144, (ri - 18) / 3, 1),
        Upsilon if r == 26 || (r % 3 == 2 && r >= 44) => scaled(819, (ri - 26) / 3, 1),
        UpsilonHat if matches!(r, 38 | 41) => scaled(820, (ri - 26) / 3, 2),
        Known3a if r % 3 == 2 && r >= 14 => scaled(1024, (ri - 26) / 3, 1),
        Known3b if r % 3 == 2 && r >= 26 => scaled(822, (ri - 26) / 3, 2),
        Known3c if r % 3 == 0 && r >= 18 => scaled(155, (ri - 18) / 3, 2),
        Known3d if r % 3 == 0 && r >= 27 => scaled(152, (ri - 18) / 3, 1),
        Fam4Known if r % 4 == 0 && (r == 20 || r >= 40) => scaled(2944, ri / 4 - 10, 2),
        Fam4New if r % 4 == 0 && (r == 40 || r >= 68) => scaled(2943, ri / 4 - 10, 1),
        Fam4Sporadic if r % 4 == 0 && r >= 48 => scaled(2944, ri / 4 - 10, 3),
        _ => None,
    };
    val.ok_or(TableError::Domain { bound, r })
}

/// Length of the `[303, 282]` code with `R = 3`.
pub const R3_SPORADIC_21: u64 = 303;
/// Length of the `[690, 659]` code with `R = 4`.
pub const R4_SPORADIC_31: u64 = 690;
/// Previously known length for `r = 31`, `R = 4`.
pub const R4_KNOWN_31: u64 = 701;

fn min_of(r: u32, bounds: &[Bound]) -> Option<u64> {
    bounds.iter().filter_map(|&b| eval_bound(b, r).ok()).min()
}

/// Best new length at `(r, R)`, if a new value exists.
pub fn new_length(r: u32, radius: u32) -> Option<u64> {
    match radius {
        2 if r >= 18 => min_of(r, &[Bound::Phi, Bound::PhiHat]),
        3 if r == 21 => Some(R3_SPORADIC_21),
        3 => min_of(r, &[Bound::Upsilon, Bound::UpsilonHat]),
        4 if r == 31 => Some(R4_SPORADIC_31),
        4 => min_of(r, &[Bound::Fam4New, Bound::Fam4Sporadic]),
        _ => None,
    }
}

/// Best previously known length at `(r, R)` among the closed forms.
pub fn known_length(r: u32, radius: u32) -> Option<u64> {
    match radius {
        2 => min_of(r, &[Bound::SmallPhi, Bound::F]),
        3 => min_of(r, &[Bound::Varphi, Bound::Gamma, Bound::Psi, Bound::Known3a, Bound::Known3b, Bound::Known3c, Bound::Known3d]),
        4 if r == 31 => Some(R4_KNOWN_31),
        4 => min_of(r, &[Bound::Fam4Known]),
        _ => None,
    }
}

/// Decrease of the known upper bound on the length function.
pub fn delta(r: u32, radius: u32) -> Result<u64, TableError> {
    let not_new = TableError::NotNew { r, radius };
    let new = new_length(r, radius).ok_or(not_new.clone())?;
    let known = known_length(r, radius).ok_or(not_new.clone())?;
    known.checked_sub(new).ok_or(not_new)
}

/// A row as printed in the comparison tables; all cells verbatim.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PublishedRow {
    pub r: u32,
    /// Closed form named in the "for n" column, empty when none.
    pub formula: &'static str,
    pub n: u64,
    pub density: &'static str,
    pub new: bool,
    /// `p(H)` for `R = 2`; `p(0)`, `p(1)`, `p(2)` for `R = 3`.
    pub p: [&'static str; 3],
    pub delta: &'static str,
    pub n0: &'static str,
    pub m: &'static str,
}

const fn row(r: u32, formula: &'static str, n: u64, density: &'static str) -> PublishedRow {
    PublishedRow { r, formula, n, density, new: false, p: ["", "", ""], delta: "", n0: "", m: "" }
}

const fn new2(r: u32, formula: &'static str, n: u64, density: &'static str, p: &'static str, delta: &'static str, n0: &'static str, m: &'static str) -> PublishedRow {
    PublishedRow { r, formula, n, density, new: true, p: [p, "", ""], delta, n0, m }
}

const fn new3(r: u32, formula: &'static str, n: u64, density: &'static str, p: [&'static str; 3], delta: &'static str) -> PublishedRow {
    PublishedRow { r, formula, n, density, new: true, p, delta, n0: "", m: "" }
}

/// The `R = 2` tables, `2 <= r <= 64`.
pub const TABLE_R2: [PublishedRow; 63] = [
    row(2, "", 2, "1"),
    row(3, "f(3)", 4, "1.37500"),
    row(4, "", 5, "1"),
    row(5, "f(5)", 9, "1.43750"),
    row(6, "", 13, "1.43750"),
    row(7, "f(7)", 19, "1.49219"),
    row(8, "phi(8)", 26, "1.37500"),
    row(9, "f(9)", 39, "1.52539"),
    PublishedRow { p: ["11", "", ""], ..row(10, "Phi(10)", 51, "1.29590") },
    row(11, "f(11)", 79, "1.54346"),
    row(12, "phi(12)", 107, "1.41089"),
    row(13, "f(13)", 159, "1.55286"),
    row(14, "phi(14)", 215, "1.41730"),
    row(15, "f(15)", 319, "1.55765"),
    row(16, "phi(16)", 431, "1.42055"),
    row(17, "f(17)", 639, "1.56007"),
    new2(18, "Phi(18)", 831, "1.31873", "2^5+1", "2^{5}", "51", "4"),
    row(19, "f(19)", 1279, "1.56128"),
    new2(20, "Phi(20)", 1663, "1.31952", "2^6+1", "2^{6}", "51", "5"),
    row(21, "f(21)", 2559, "1.56189"),
    new2(22, "PhiHat(22)", 3389, "1.36956", "", "66", "51", "6"),
    row(23, "f(23)", 5119, "1,56219"),
    new2(24, "PhiHat(24)", 6781, "1.37057", "", "130", "51", "7"),
    row(25, "f(25)", 10239, "1.56235"),
    new2(26, "PhiHat(26)", 13565, "1.37107", "", "258", "51", "8"),
    row(27, "f(27)", 20479, "1.56242"),
    new2(28, "Phi(28)", 26623, "1.32026", "2^6+2", "2^{10}", "Phi(18)", "5"),
    row(29, "f(29)", 40959, "1.56246"),
    new2(30, "Phi(30)", 53247, "1.32029", "2^7+1", "2^{11}", "Phi(18)", "6"),
    row(31, "f(31)", 81919, "1.56248"),
    new2(32, "Phi(32)", 106495, "1.32030", "2^8+1", "2^{12}", "Phi(18)", "7"),
    row(33, "f(33)", 163839, "1.56249"),
    new2(34, "Phi(34)", 212991, "1.32031", "2^8+1", "2^{13}", "Phi(20)", "7"),
    row(35, "f(35)", 327679, "1.56250"),
    new2(36, "Phi(36)", 425983, "1.32031", "2^9+1", "2^{14}", "Phi(20)", "8"),
    row(37, "f(37)", 655359, "1.56250"),
    new2(38, "Phi(38)", 851967, "1.32031", "2^{10}+1", "2^{15}", "Phi(20)", "9"),
    row(39, "f(39)", 1310719, "1.56250"),
    new2(40, "Phi(40)", 1703935, "1.32031", "2^{11}+1", "2^{16}", "Phi(20)", "10"),
    row(41, "f(41)", 2621439, "1.56250"),
    new2(42, "Phi(42)", 3407871, "1.32031", "2^8+1", "2^{17}", "Phi(28)", "7"),
    row(43, "f(43)", 5242879, "1.56250"),
    new2(44, "Phi(44)", 6815743, "1.32031", "2^9+1", "2^{18}", "Phi(28)", "8"),
    row(45, "f(45)", 10485759, "1,56250"),
    new2(46, "Phi(46)", 13631487, "1.32031", "2^{9}+1", "2^{19}", "Phi(30)", "8"),
    row(47, "f(47)", 20971519, "1.56250"),
    new2(48, "Phi(48)", 27262975, "1.32031", "2^{10}+1", "2^{20}", "Phi(30)", "9"),
    row(49, "f(49)", 41943039, "1.56250"),
    new2(50, "Phi(50)", 54525951, "1.32031", "2^{10}+1", "2^{21}", "Phi(32)", "9"),
    row(51, "f(51)", 83886079, "1.56250"),
    new2(52, "Phi(52)", 109051903, "1.32031", "2^{11}+1", "2^{22}", "Phi(32)", "10"),
    row(53, "f(53)", 167772159, "1.56250"),
    new2(54, "Phi(54)", 218103807, "1.32031", "2^{11}+1", "2^{23}", "Phi(34)", "10"),
    row(55, "f(55)", 335544319, "1.56250"),
    new2(56, "Phi(56)", 436207615, "1.32031", "2^{12}+1", "2^{24}", "Phi(34)", "11"),
    row(57, "f(57)", 671088639, "1.56250"),
    new2(58, "Phi(58)", 872415231, "1.32031", "2^{12}+1", "2^{25}", "Phi(36)", "11"),
    row(59, "f(59)", 1342177279, "1.56250"),
    new2(60, "Phi(60)", 1744830463, "1.32031", "2^{13}+1", "2^{26}", "Phi(36)", "12"),
    row(61, "f(61)", 2684354559, "1.56250"),
    new2(62, "Phi(62)", 3489660927, "1.32031", "2^{13}+1", "2^{27}", "Phi(38)", "12"),
    row(63, "f(63)", 5368709119, "1.56250"),
    new2(64, "Phi(64)", 6979321855, "1.32031", "2^{14}+1", "2^{28}", "Phi(38)", "13"),
];

/// The `R = 3` tables, `3 <= r <= 64`.
pub const TABLE_R3: [PublishedRow; 62] = [
    row(3, "", 3, "1"),
    PublishedRow { p: ["3", "5", ""], ..row(4, "varphi(4)", 5, "1.62500") },
    row(5, "", 6, "1.31250"),
    PublishedRow { p: ["7", "", ""], ..row(6, "", 7, "1") },
    PublishedRow { p: ["7", "8", ""], ..row(7, "varphi(7)", 11, "1.81250") },
    PublishedRow { p: ["10", "", ""], ..row(8, "", 14, "1.83594") },
    PublishedRow { p: ["", "11", ""], ..row(9, "", 18, "1.92969") },
    row(10, "", 22, "1.75195"),
    PublishedRow { p: ["23", "", ""], ..row(11, "", 23, "1") },
    row(12, "", 37, "2.06885"),
    row(13, "", 52, "2.86609"),
    row(14, "", 63, "2.54688"),
    // the 32 sits in the p(2) column of the printed row
    PublishedRow { p: ["", "", "32"], ..row(15, "psi(15)", 71, "1.82227") },
    row(16, "varphi(16)", 95, "2.18164"),
    row(17, "", 126, "2.54442"),
    row(18, "", 153, "2.27760"),
    row(19, "", 205, "2.73900"),
    row(20, "", 254, "2.60486"),
    new3(21, "", 303, "2.21090", ["", "35", ""], "5"),
    row(22, "varphi(22)", 383, "2.23254"),
    row(23, "", 511, "2.65112"),
    row(24, "", 618, "2.34477"),
    row(25, "varphi(25)", 767, "2.24124"),
    new3(26, "Upsilon(26)", 818, "1.35935", ["35", "35", "818"], "2"),
    row(27, "", 1215, "2.22725"),
    row(28, "varphi(28)", 1535, "2.24561"),
    row(29, "", 1642, "1.37436"),
    row(30, "psi(30)", 2303, "1.89597"),
    row(31, "varphi(31)", 3071, "2.24780"),
    row(32, "", 3286, "1.37687"),
    row(33, "psi(33)", 4607, "1.89720"),
    row(34, "varphi(34)", 6143, "2.24890"),
    row(35, "", 6574, "1.37812"),
    row(36, "psi(36)", 9215, "1.89782"),
    row(37, "varphi(37)", 12287, "2.24945"),
    new3(38, "UpsilonHat(38)", 13118, "1.36871", ["57", "59", ""], "2^5"),
    row(39, "psi(39)", 18431, "1.89813"),
    row(40, "varphi(40)", 24575, "2.24973"),
    new3(41, "UpsilonHat(41)", 26238, "1.36902", ["89", "91", ""], "33"),
    row(42, "psi(42)", 36863, "1.89828"),
    row(43, "varphi(43)", 49151, "2.24986"),
    new3(44, "Upsilon(44)", 52415, "1.36426", ["", "2^7+3", ""], "2^7"),
    row(45, "psi(45)", 73727, "1.89836"),
    row(46, "varphi(46)", 98303, "2.24993"),
    new3(47, "Upsilon(47)", 104831, "1.36429", ["", "2^8+3", ""], "2^8"),
    row(48, "psi(48)", 147455, "1.89840"),
    row(49, "varphi(49)", 196607, "2.24997"),
    new3(50, "Upsilon(50)", 209663, "1.36431", ["", "2^9+3", ""], "2^9"),
    row(51, "psi(51)", 294911, "1.89842"),
    row(52, "varphi(52)", 393215, "2.24998"),
    new3(53, "Upsilon(53)", 419327, "1.36432", ["", "2^{10}+3", ""], "2^{10}"),
    row(54, "psi(54)", 589823, "1.89843"),
    row(55, "varphi(55)", 786431, "2.24999"),
    new3(56, "Upsilon(56)", 838655, "1.36433", ["", "", "819"], "2^{11}"),
    row(57, "psi(57)", 1179647, "1.89843"),
    row(58, "varphi(58)", 1572863, "2.25000"),
    new3(59, "Upsilon(59)", 1677311, "1.36433", ["", "", "819"], "2^{12}"),
    row(60, "psi(60)", 2359295, "1.89844"),
    row(61, "varphi(61)", 3145727, "2.25000"),
    new3(62, "Upsilon(62)", 3354623, "1.36433", ["", "", "819"], "2^{13}"),
    row(63, "psi(63)", 4718591, "1.89844"),
    row(64, "varphi(64)", 6291455, "2.25000"),
];

pub fn published_table(radius: u32) -> Result<&'static [PublishedRow], TableError> {
    match radius {
        2 => Ok(&TABLE_R2),
        3 => Ok(&TABLE_R3),
        _ => Err(TableError::NoTable(radius)),
    }
}

/// Evaluates a printed cell such as `66`, `2^{5}`, `2^6+2` or `2^{10}+3`.
pub fn parse_cell(cell: &str) -> Option<u64> {
    let cell = cell.trim();
    if cell.is_empty() {
        return None;
    }
    let mut total = 0u64;
    for term in cell.split('+') {
        let term = term.trim();
        let v = match term.split_once('^') {
            Some((base, exp)) => {
                let base: u64 = base.trim().parse().ok()?;
                let exp: u32 = exp.trim().trim_start_matches('{').trim_end_matches('}').parse().ok()?;
                base.checked_pow(exp)?
            }
            None => term.parse().ok()?,
        };
        total = total.checked_add(v)?;
    }
    Some(total)
}

/// A printed density with a decimal comma read as a decimal point.
pub fn normalize_density(cell: &str) -> String {
    cell.trim().replace(',', ".")
}

/// A formula name from the "for n" column.
pub fn parse_formula(name: &str) -> Option<(Bound, u32)> {
    let (head, arg) = name.split_once('(')?;
    let r: u32 = arg.strip_suffix(')')?.parse().ok()?;
    Some((head.parse().ok()?, r))
}

/// A row recomputed from the closed forms and the construction bookkeeping.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RenderedRow {
    pub r: u32,
    pub radius: u32,
    pub n: u64,
    pub density: String,
    pub new: bool,
    /// Partition sizes `p(H, ℓ)` for `ℓ = 0, 1, 2`, where recorded.
    pub p: [Option<u64>; 3],
    pub delta: Option<u64>,
    pub source: String,
}

/// Partition sizes of the constructed rows, as the chains produce them.
pub fn chain_partition_sizes(r: u32, radius: u32) -> [Option<u64>; 3] {
    match (radius, r) {
        (2, 10) => [Some(11), None, None],
        (2, r) if r >= 18 && r % 2 == 0 => match family_spec(2, r) {
            Some(spec) => {
                let m = spec.m;
                match spec.variant {
                    Variant::QM5_2 => [Some((1 << (m + 1)) + 2), None, None],
                    Variant::QM3_2 => [None; 3],
                    _ => [Some((1 << (m + 1)) + 1), None, None],
                }
            }
            None => [None; 3],
        },
        (3, 21) => [None, Some(35), None],
        (3, 26) => [Some(35), Some(35), Some(818)],
        (3, 38) => [Some(57), Some(59), None],
        (3, 41) => [Some(89), Some(91), None],
        (3, r) if r >= 44 && r % 3 == 2 => {
            let m = (r - 26) / 3;
            if m <= 9 {
                [None, Some((1 << (m + 1)) + 3), None]
            } else {
                [None, None, Some(819)]
            }
        }
        _ => [None; 3],
    }
}

/// Recomputes every row of a table for `lo <= r <= hi`.
pub fn render_table(radius: u32, lo: u32, hi: u32) -> Result<Vec<RenderedRow>, TableError> {
    let mut out = Vec::new();
    if radius == 4 {
        for r in lo..=hi {
            if let Some(n) = new_length(r, 4) {
                out.push(RenderedRow {
                    r,
                    radius,
                    n,
                    density: density(n, r, 4).to_decimal(5),
                    new: true,
                    p: [None; 3],
                    delta: delta(r, 4).ok(),
                    source: if r == 31 { "QM4_4".into() } else { "R=4 families".into() },
                });
            }
        }
        return Ok(out);
    }
    for pr in published_table(radius)?.iter().filter(|p| (lo..=hi).contains(&p.r)) {
        let r = pr.r;
        let (n, source) = if pr.new {
            let n = new_length(r, radius).ok_or(TableError::NotNew { r, radius })?;
            let src = family_spec(radius, r).map(|s| format!("{} m={}", s.variant, s.m)).unwrap_or_default();
            (n, src)
        } else if let Some((b, br)) = parse_formula(pr.formula) {
            (eval_bound(b, br)?, pr.formula.to_string())
        } else {
            (pr.n, "literature".to_string())
        };
        out.push(RenderedRow {
            r,
            radius,
            n,
            density: density(n, r, radius).to_decimal(5),
            new: pr.new,
            p: if pr.new || (radius == 2 && r == 10) { chain_partition_sizes(r, radius) } else { [None; 3] },
            delta: if pr.new { Some(delta(r, radius)?) } else { None },
            source,
        });
    }
    Ok(out)
}

/// Plain-text, CSV or JSON rendering.
pub fn format_rows(rows: &[RenderedRow], format: &str) -> Result<String, TableError> {
    let cell = |v: Option<u64>| v.map(|x| x.to_string()).unwrap_or_default();
    match format {
        "json" => serde_json::to_string_pretty(rows).map_err(|e| TableError::Node(e.to_string())),
        "csv" => {
            let mut s = String::from("r,R,n,density,new,p0,p1,p2,delta,source\n");
            for r in rows {
                s += &format!(
                    "{},{},{},{},{},{},{},{},{},{}\n",
                    r.r, r.radius, r.n, r.density, r.new, cell(r.p[0]), cell(r.p[1]), cell(r.p[2]), cell(r.delta), r.source
                );
            }
            Ok(s)
        }
        "text" => {
            let mut s = format!("{:>3} {:>12} {:>9} {:>4} {:>6} {:>6} {:>6} {:>10}  {}\n", "r", "n", "density", "new", "p0", "p1", "p2", "delta", "source");
            for r in rows {
                s += &format!(
                    "{:>3} {:>12} {:>9} {:>4} {:>6} {:>6} {:>6} {:>10}  {}\n",
                    r.r,
                    r.n,
                    r.density,
                    if r.new { "*" } else { "" },
                    cell(r.p[0]),
                    cell(r.p[1]),
                    cell(r.p[2]),
                    cell(r.delta),
                    r.source
                );
            }
            Ok(s)
        }
        other => Err(TableError::Node(format!("unknown format {other}"))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepRole {
    /// Part of an infinite family.
    Family,
    /// A single improved row.
    Sporadic,
    /// Built only because a later step needs it.
    Dependency,
}

/// One construction of a chain, named `r<r>` (`r<r>R<R>` for `R >= 3`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FamilyStep {
    pub name: String,
    pub r: u32,
    pub radius: u32,
    pub role: StepRole,
    pub spec: ConstructionSpec,
    pub expected_n: u64,
    /// `(partition name, subset count)` expected on the result.
    pub partitions: Vec<(String, u64)>,
    /// Needs a code that is not built in (named in `spec.start`).
    pub needs_import: bool,
}

pub fn step_name(radius: u32, r: u32) -> String {
    if radius == 2 {
        format!("r{r}")
    } else {
        format!("r{r}R{radius}")
    }
}

/// The construction producing the new row at `(R, r)`.
pub fn family_spec(radius: u32, r: u32) -> Option<ConstructionSpec> {
    use Variant::*;
    let spec = ConstructionSpec::new;
    match radius {
        2 => match r {
            18 => Some(spec(QM4_2, "kr", "pkr-star", 4)),
            20 => Some(spec(QM6_2, "kr", "pkr", 5)),
            22 | 24 | 26 => Some(spec(QM3_2, "kr", "pkr", (r - 10) / 2)),
            28 => Some(spec(QM5_2, "r18", "derived", 5)),
            30 | 32 => Some(spec(QM6_2, "r18", "derived", (r - 18) / 2)),
            34..=40 if r % 2 == 0 => Some(spec(QM6_2, "r20", "derived", (r - 20) / 2)),
            42 | 44 => Some(spec(QM6_2, "r28", "derived", (r - 28) / 2)),
            r if r >= 46 && r % 2 == 0 && r <= 64 => {
                let (t0, m) = if r % 4 == 2 { ((r + 14) / 4, (r + 14) / 4 - 7) } else { ((r + 12) / 4, (r + 12) / 4 - 6) };
                Some(spec(QM6_2, &format!("r{}", 2 * t0), "derived", m))
            }
            _ => None,
        },
        3 => match r {
            21 => Some(spec(QM4_3, "ok", "pok", 4)),
            26 => Some(spec(QM5_3, "golay", "trivial", 5).with_inner("kr", "pkr")),
            38 => Some(spec(QM5_3, "golay", "trivial", 9).with_inner("r18", "derived")),
            41 => Some(spec(QM5_3, "golay", "trivial", 10).with_inner("r20", "derived")),
            44..=53 if r % 3 == 2 => Some(spec(QM4_3, "r26R3", "derived-l1", (r - 26) / 3)),
            56..=64 if r % 3 == 2 => Some(spec(QM3_3, "r26R3", "trivial-l2", (r - 26) / 3)),
            _ => None,
        },
        4 => match r {
            31 => Some(spec(QM4_4, "ok2", "trivial", 5).with_inner("kr", "pkr")),
            40 => Some(spec(QM1_4, "dd90", "import-l2", 5)),
            _ => None,
        },
        _ => None,
    }
}

/// Chain steps for radius `R` up to `r_max`, dependencies first.
pub fn generate_family(radius: u32, r_max: u32) -> Vec<FamilyStep> {
    let mut out = Vec::new();
    let mut push = |radius: u32, r: u32, role: StepRole| {
        let Some(spec) = family_spec(radius, r) else { return };
        let needs_import = spec.start == "dd90";
        let expected_n = match (spec.variant, needs_import) {
            (Variant::QM1_4, true) => (1u64 << spec.m) * (90 + 2) - 2,
            _ => new_length(r, radius).unwrap_or(0),
        };
        let sizes = chain_partition_sizes(r, radius);
        let mut partitions = Vec::new();
        let names: &[&str] = match spec.variant {
            Variant::QM5_3 if r == 26 => &["derived", "derived-l1", "trivial-l2"],
            Variant::QM5_3 => &["derived", "split-l1", ""],
            Variant::QM4_3 => &["", "derived-l1", ""],
            Variant::QM3_3 => &["", "", "derived-l2"],
            _ => &["derived"],
        };
        for (k, name) in names.iter().enumerate() {
            if let (false, Some(c)) = (name.is_empty(), sizes.get(k).copied().flatten()) {
                partitions.push((name.to_string(), c));
            }
        }
        out.push(FamilyStep { name: step_name(radius, r), r, radius, role, spec, expected_n, partitions, needs_import });
    };
    match radius {
        2 => {
            for r in (18..=r_max.min(64)).step_by(2) {
                let role = if matches!(r, 22 | 24 | 26) { StepRole::Sporadic } else { StepRole::Family };
                push(2, r, role);
            }
        }
        3 => {
            push(2, 18, StepRole::Dependency);
            push(2, 20, StepRole::Dependency);
            for r in 21..=r_max.min(64) {
                let role = if matches!(r, 21 | 38 | 41) { StepRole::Sporadic } else { StepRole::Family };
                push(3, r, role);
            }
        }
        4 => {
            for r in [31, 40] {
                if r <= r_max {
                    push(4, r, if r == 31 { StepRole::Sporadic } else { StepRole::Family });
                }
            }
        }
        _ => {}
    }
    out
}

/// In-memory resolution of chain steps, starting from the built-in seeds.
pub struct Chain {
    nodes: HashMap<String, Arc<dyn CodeNode>>,
}

impl Default for Chain {
    fn default() -> Self {
        Self::with_seeds()
    }
}

impl Chain {
    pub fn with_seeds() -> Self {
        let mut nodes: HashMap<String, Arc<dyn CodeNode>> = HashMap::new();
        for name in seeds::SEED_NAMES {
            let rec = seeds::seed_by_name(name).expect("listed seed");
            let node = TableCode::from_record(&rec).expect("seeds fit a table");
            nodes.insert(name.to_string(), Arc::new(node));
        }
        Self { nodes }
    }

    pub fn insert(&mut self, name: &str, node: Arc<dyn CodeNode>) {
        self.nodes.insert(name.to_string(), node);
    }

    pub fn get(&self, name: &str) -> Option<Arc<dyn CodeNode>> {
        self.nodes.get(name).cloned()
    }

    /// Builds a construction whose start and inner codes are already known.
    pub fn build(&mut self, name: &str, spec: &ConstructionSpec) -> Result<Arc<QmCode>, TableError> {
        let start = self.get(&spec.start).ok_or_else(|| TableError::Missing(spec.start.clone()))?;
        let inner = match &spec.inner {
            Some(i) => Some(self.get(i).ok_or_else(|| TableError::Missing(i.clone()))?),
            None => None,
        };
        let code = Arc::new(construct::construct(name, spec, start, inner)?);
        self.nodes.insert(name.to_string(), code.clone());
        Ok(code)
    }

    /// Builds the step and everything it depends on among `steps`.
    pub fn build_steps(&mut self, steps: &[FamilyStep]) -> Result<Vec<Arc<QmCode>>, TableError> {
        let mut out = Vec::new();
        for s in steps {
            if s.needs_import && self.get(&s.spec.start).is_none() {
                continue;
            }
            out.push(self.build(&s.name, &s.spec)?);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bound_values() {
        assert_eq!(eval_bound(Bound::Phi, 18).unwrap(), 831);
        assert_eq!(eval_bound(Bound::Phi, 10).unwrap(), 51);
        assert_eq!(eval_bound(Bound::PhiHat, 22).unwrap(), 3389);
        assert_eq!(eval_bound(Bound::Upsilon, 26).unwrap(), 818);
        assert_eq!(eval_bound(Bound::UpsilonHat, 38).unwrap(), 13118);
        assert_eq!(eval_bound(Bound::Psi, 15).unwrap(), 71);
        assert_eq!(eval_bound(Bound::Fam4Known, 20).unwrap(), 90);
        assert!(eval_bound(Bound::Phi, 22).is_err());
        assert!(eval_bound(Bound::Psi, 21).is_err());
    }

    #[test]
    fn deltas() {
        assert_eq!(delta(18, 2).unwrap(), 32);
        assert_eq!(delta(22, 2).unwrap(), 66);
        assert_eq!(delta(21, 3).unwrap(), 5);
        assert_eq!(delta(26, 3).unwrap(), 2);
        assert_eq!(delta(41, 3).unwrap(), 33);
        assert_eq!(delta(31, 4).unwrap(), 11);
        assert_eq!(delta(48, 4).unwrap(), 1);
        assert!(delta(19, 2).is_err());
    }

    #[test]
    fn cells() {
        assert_eq!(parse_cell("2^{5}"), Some(32));
        assert_eq!(parse_cell("2^6+2"), Some(66));
        assert_eq!(parse_cell("2^{10}+3"), Some(1027));
        assert_eq!(parse_cell(""), None);
        assert_eq!(normalize_density("1,56219"), "1.56219");
    }

    #[test]
    fn family_rules_match_table_columns() {
        for row in TABLE_R2.iter().filter(|r| r.new) {
            let spec = family_spec(2, row.r).unwrap();
            assert_eq!(spec.m.to_string(), row.m, "r={}", row.r);
        }
    }
}
