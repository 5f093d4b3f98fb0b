//! File formats of the command-line surface.
//!
//! Walk inputs are TOML: a group string plus either a `multiset` array or a
//! `[probs]` table mapping element strings to `"p/q"` rationals (exact) or
//! floats (numeric mode, with a declared `tolerance`). Sceneries, verdicts,
//! pairs and class reports travel as JSON; lag tables and histograms as CSV;
//! traces as packed observation bits with a JSON sidecar.

use crate::error::{Error, Result};
use crate::group::{GroupElement, GroupSpec};
use crate::oracle::{ConsistencyReport, Equivalence, EquivalenceClassReport};
use crate::scenery::{IndistinguishablePair, PairCase, Scenery};
use crate::sim::WalkTrace;
use crate::spectral::{SpatialMultispectrum, TemporalAutocorrelation, TemporalMultispectrum};
use crate::walk::{
    AnalysisMode, AnalysisVerdict, BoundedSupportReport, FourierTable, StepDistribution,
    Verdict,
};
use num_rational::BigRational;
use serde::Deserialize;
use serde_json::{json, Value};
use std::collections::BTreeMap;
use std::str::FromStr;

/// Default declared tolerance for float entries read from walk files (f64
/// literals carry roundoff far above the library's 1e-30 default).
pub const FILE_FLOAT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum MultisetEntry {
    Int(i64),
    Coords(Vec<i64>),
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum ProbValue {
    Rational(String),
    Float(f64),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct WalkFile {
    group: String,
    multiset: Option<Vec<MultisetEntry>>,
    probs: Option<BTreeMap<String, ProbValue>>,
    tolerance: Option<f64>,
}

/// Parse an element string: comma-separated flattened coordinates
/// (`"3"`, `"1,4,3"`).
pub fn parse_element(group: &GroupSpec, text: &str) -> Result<GroupElement> {
    let coords: Vec<i64> = text
        .split(',')
        .map(|c| {
            c.trim()
                .parse::<i64>()
                .map_err(|_| Error::Parse(format!("bad coordinate `{c}` in element `{text}`")))
        })
        .collect::<Result<_>>()?;
    group.element_from_ints(&coords)
}

/// Load a walk from TOML text.
pub fn load_walk(text: &str) -> Result<StepDistribution> {
    let file: WalkFile =
        toml::from_str(text).map_err(|e| Error::Parse(format!("walk file: {e}")))?;
    let group = GroupSpec::parse(&file.group)?;
    match (file.multiset, file.probs) {
        (Some(entries), None) => {
            let elements = entries
                .iter()
                .map(|e| match e {
                    MultisetEntry::Int(v) => {
                        if group.is_cycle() {
                            group.element_from_ints(&[*v])
                        } else {
                            Err(Error::Parse(
                                "scalar multiset entries need a cycle group; use coordinate arrays"
                                    .into(),
                            ))
                        }
                    }
                    MultisetEntry::Coords(c) => group.element_from_ints(c),
                })
                .collect::<Result<Vec<_>>>()?;
            StepDistribution::uniform(group, &elements)
        }
        (None, Some(probs)) => {
            let all_exact = probs.values().all(|v| matches!(v, ProbValue::Rational(_)));
            if all_exact {
                let entries = probs
                    .iter()
                    .map(|(k, v)| {
                        let ProbValue::Rational(s) = v else { unreachable!() };
                        let p = BigRational::from_str(s.trim())
                            .map_err(|_| Error::Parse(format!("bad rational `{s}`")))?;
                        Ok((group.index_of(&parse_element(&group, k)?), p))
                    })
                    .collect::<Result<Vec<_>>>()?;
                StepDistribution::exact_from_indices(group, entries)
            } else {
                let tolerance = file.tolerance.unwrap_or(FILE_FLOAT_TOLERANCE);
                let scale = crate::numeric::working_scale(crate::walk::DEFAULT_PRECISION_BITS);
                let entries = probs
                    .iter()
                    .map(|(k, v)| {
                        let idx = group.index_of(&parse_element(&group, k)?);
                        let p = match v {
                            ProbValue::Float(f) => crate::numeric::BigReal::from_f64(*f, scale),
                            ProbValue::Rational(s) => {
                                let r = BigRational::from_str(s.trim()).map_err(|_| {
                                    Error::Parse(format!("bad rational `{s}`"))
                                })?;
                                crate::numeric::BigReal::from_rational(&r, scale)
                            }
                        };
                        Ok((idx, p))
                    })
                    .collect::<Result<Vec<_>>>()?;
                StepDistribution::float_from_indices(group, entries, tolerance)
            }
        }
        (Some(_), Some(_)) => Err(Error::Parse(
            "walk file must give either `multiset` or `[probs]`, not both".into(),
        )),
        (None, None) => Err(Error::Parse(
            "walk file needs a `multiset` array or a `[probs]` table".into(),
        )),
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SceneryFile {
    group: String,
    bits: Option<Vec<u8>>,
    ones: Option<Vec<u64>>,
}

/// Load a scenery from JSON text: a group string plus either a 0/1 array in
/// enumeration order or a list of ones positions.
pub fn load_scenery(text: &str) -> Result<Scenery> {
    let file: SceneryFile =
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("scenery file: {e}")))?;
    let group = GroupSpec::parse(&file.group)?;
    match (file.bits, file.ones) {
        (Some(bits), None) => Scenery::new(group, bits),
        (None, Some(ones)) => Scenery::from_ones(group, &ones),
        (Some(bits), Some(ones)) => {
            let scenery = Scenery::new(group, bits)?;
            if scenery.ones_indices() != ones {
                return Err(Error::Parse("scenery `bits` and `ones` disagree".into()));
            }
            Ok(scenery)
        }
        (None, None) => {
            Err(Error::Parse("scenery file needs `bits` or `ones`".into()))
        }
    }
}

pub fn scenery_to_json(f: &Scenery) -> Value {
    json!({
        "group": f.group().to_string(),
        "bits": f.bits(),
        "ones": f.ones_indices(),
    })
}

fn fourier_table_json(table: &FourierTable) -> Value {
    let rows: Vec<Value> = table
        .to_numeric_rows()
        .into_iter()
        .map(|(x, re, im)| json!({"x": x, "re": re, "im": im}))
        .collect();
    Value::Array(rows)
}

fn verdict_name(v: Verdict) -> &'static str {
    match v {
        Verdict::Reconstructive => "reconstructive",
        Verdict::NotReconstructive => "not_reconstructive",
        Verdict::Unknown => "unknown",
    }
}

/// Render an analysis verdict. With `explain`, exact tables additionally
/// carry the reduced cyclotomic form of every coefficient as
/// (exponent vector, numerator, denominator) triples.
pub fn verdict_to_json(verdict: &AnalysisVerdict, group: &GroupSpec, explain: bool) -> Value {
    let collisions: Vec<Value> = verdict
        .collisions
        .iter()
        .map(|c| {
            json!({
                "x": group.element_at(c.x).to_string(),
                "y": group.element_at(c.y).to_string(),
                "multiplier": c.multiplier,
            })
        })
        .collect();
    let near_ties: Vec<Value> = verdict
        .near_ties
        .iter()
        .map(|&(x, y)| {
            json!({
                "x": group.element_at(x).to_string(),
                "y": group.element_at(y).to_string(),
            })
        })
        .collect();
    let mut out = json!({
        "group": group.to_string(),
        "verdict": verdict_name(verdict.verdict),
        "reason": verdict.reason.as_ref().map(|r| r.to_string()),
        "distinct": verdict.distinct,
        "collisions": collisions,
        "near_ties": near_ties,
        "drift": verdict.drift.as_ref().map(|d| d.to_string()),
        "symmetric": verdict.symmetric,
        "mode": match verdict.mode {
            AnalysisMode::Exact => "exact",
            AnalysisMode::Float => "float",
        },
        "fourier_table": verdict.table.as_ref().map(fourier_table_json),
    });
    if explain {
        if let Some(FourierTable::Exact { values, .. }) = &verdict.table {
            let exact: Vec<Value> = values
                .iter()
                .enumerate()
                .map(|(i, v)| {
                    let triples: Vec<Value> = v
                        .debug_triples()
                        .into_iter()
                        .map(|(e, num, den)| json!([e, num, den]))
                        .collect();
                    json!({"x": group.element_at(i as u64).to_string(), "terms": triples})
                })
                .collect();
            out["fourier_table_exact"] = Value::Array(exact);
        }
    }
    out
}

fn pair_case_json(case: &PairCase) -> Value {
    match case {
        PairCase::CycleMultiplier { v } => json!({"case": "cycle_multiplier", "v": v}),
        PairCase::CycleFlip => json!({"case": "cycle_flip"}),
        PairCase::StayPut => json!({"case": "stay_put"}),
        PairCase::TorusMultiple { ell } => json!({"case": "torus_multiple", "ell": ell}),
        PairCase::TorusOrthogonal => json!({"case": "torus_orthogonal"}),
        PairCase::ProductFactor { factor, inner } => {
            json!({"case": "product_factor", "factor": factor, "inner": pair_case_json(inner)})
        }
        PairCase::ParityZ12 => json!({"case": "parity_z12"}),
    }
}

pub fn pair_to_json(pair: &IndistinguishablePair, oracle: Option<&Equivalence>) -> Value {
    json!({
        "f1": scenery_to_json(&pair.f1),
        "f2": scenery_to_json(&pair.f2),
        "witness": pair.witness.as_ref().map(|(x, y)| json!({
            "x": x.to_string(),
            "y": y.to_string(),
        })),
        "construction": pair_case_json(&pair.case),
        "transform": pair.transform,
        "oracle": oracle.map(|o| match o {
            Equivalence::Equivalent => json!({"equivalent": true, "mode": "exact"}),
            Equivalence::NoDistinctionFound => {
                json!({"equivalent": true, "mode": "heuristic"})
            }
            Equivalence::NotEquivalent(cert) => json!({
                "equivalent": false,
                "certificate": cert.observations,
            }),
            Equivalence::Undecided(reason) => json!({"equivalent": null, "reason": reason}),
        }),
    })
}

pub fn class_report_to_json(report: &EquivalenceClassReport) -> Value {
    json!({
        "group": report.group.to_string(),
        "walk": report.walk_text,
        "minimal": report.minimal,
        "heuristic": report.heuristic,
        "class_count": report.classes.len(),
        "classes": report.classes,
    })
}

/// Histogram of class sizes: `class_size,count` rows.
pub fn class_histogram_csv(report: &EquivalenceClassReport) -> String {
    let mut hist: BTreeMap<usize, usize> = BTreeMap::new();
    for class in &report.classes {
        *hist.entry(class.len()).or_insert(0) += 1;
    }
    let mut out = String::from("class_size,count\n");
    for (size, count) in hist {
        out.push_str(&format!("{size},{count}\n"));
    }
    out
}

pub fn consistency_report_to_json(report: &ConsistencyReport) -> Value {
    json!({
        "verdict": verdict_name(report.verdict),
        "classes_minimal": report.minimal,
        "heuristic": report.heuristic,
        "consistent": report.consistent,
        "resolution": report.resolution,
    })
}

pub fn bounded_report_to_json(report: &BoundedSupportReport) -> Value {
    json!({
        "n_bound": report.n_bound,
        "symmetric": report.symmetric,
        "gcd": report.gcd,
        "normalized": report.normalized,
        "certificate": report.certificate,
        "b": report.b,
    })
}

/// Lag table as CSV: `lag,numerator,denominator,float`.
pub fn temporal_autocorrelation_csv(b: &TemporalAutocorrelation) -> String {
    let mut out = String::from("lag,numerator,denominator,float\n");
    for (lag, v) in b.values.iter().enumerate() {
        let f = rational_to_f64(v);
        out.push_str(&format!("{lag},{},{},{f}\n", v.numer(), v.denom()));
    }
    out
}

fn rational_to_f64(v: &BigRational) -> f64 {
    use num_traits::ToPrimitive;
    v.to_f64().unwrap_or(f64::NAN)
}

pub fn spatial_multispectrum_to_json(a: &SpatialMultispectrum) -> Value {
    let entries: Vec<Value> = a
        .entries
        .iter()
        .map(|(tuple, v)| json!({"tuple": tuple, "value": v}))
        .collect();
    json!({
        "group": a.group.to_string(),
        "arity": a.arity,
        "entries": entries,
    })
}

pub fn temporal_multispectrum_to_json(b: &TemporalMultispectrum) -> Value {
    let entries: Vec<Value> = b
        .entries
        .iter()
        .map(|(tuple, v)| {
            json!({
                "tuple": tuple,
                "numerator": v.numer().to_string(),
                "denominator": v.denom().to_string(),
                "float": rational_to_f64(v),
            })
        })
        .collect();
    json!({"arity": b.arity, "entries": entries})
}

/// Observations packed 8 per byte, LSB first.
pub fn pack_observations(trace: &WalkTrace) -> Vec<u8> {
    let mut out = vec![0u8; trace.observations.len().div_ceil(8)];
    for (i, &o) in trace.observations.iter().enumerate() {
        if o == 1 {
            out[i / 8] |= 1 << (i % 8);
        }
    }
    out
}

pub fn trace_sidecar_json(
    trace: &WalkTrace,
    walk: &StepDistribution,
    scenery: &Scenery,
) -> Value {
    json!({
        "seed": trace.seed,
        "steps": trace.observations.len(),
        "group": walk.group().to_string(),
        "walk": walk.to_string(),
        "scenery_ones": scenery.ones_indices(),
        "bit_packing": "lsb_first",
    })
}

/// Positions as CSV: `t,position`.
pub fn positions_csv(trace: &WalkTrace, group: &GroupSpec) -> String {
    let mut out = String::from("t,position\n");
    for (t, &p) in trace.positions.iter().enumerate() {
        out.push_str(&format!("{},{}\n", t + 1, group.element_at(p)));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::walk::analyze;

    #[test]
    fn walk_file_multiset_and_probs() {
        let dist = load_walk("group = \"Z7\"\nmultiset = [1, 2, 4]\n").unwrap();
        assert!(dist.is_exact());
        assert_eq!(dist.support_indices(), vec![1, 2, 4]);

        let dist = load_walk(
            "group = \"Z7\"\n[probs]\n\"1\" = \"1/3\"\n\"2\" = \"1/3\"\n\"4\" = \"1/3\"\n",
        )
        .unwrap();
        assert!(dist.is_exact());

        // Negative steps reduce into the cycle.
        let dist = load_walk("group = \"Z12\"\nmultiset = [-2, -1, 1, 2]\n").unwrap();
        assert_eq!(dist.support_indices(), vec![1, 2, 10, 11]);

        // Product group with coordinate arrays.
        let dist = load_walk("group = \"Z7xZ11\"\nmultiset = [[1,0],[2,0],[4,0]]\n").unwrap();
        assert_eq!(dist.group().to_string(), "Z7xZ11");
    }

    #[test]
    fn walk_file_float_mode() {
        let dist = load_walk(
            "group = \"Z7\"\ntolerance = 1e-9\n[probs]\n\"1\" = 0.5\n\"2\" = 0.5\n",
        )
        .unwrap();
        assert!(!dist.is_exact());
        assert_eq!(dist.declared_tolerance(), Some(1e-9));
    }

    #[test]
    fn walk_file_rejects_malformed() {
        assert!(load_walk("group = \"Z7\"").is_err());
        assert!(load_walk("group = \"Z7\"\nmultiset = [1]\n[probs]\n\"1\" = \"1\"\n").is_err());
        assert!(load_walk("group = \"Z7\"\n[probs]\n\"1\" = \"2/3\"\n").is_err()); // sums to 2/3
        assert!(load_walk("group = \"Z7\"\nmultiset = [[1,2]]\n").is_err()); // wrong coords
    }

    #[test]
    fn scenery_roundtrip() {
        let f = Scenery::indicator_cycle(7, &[0, 2]).unwrap();
        let text = scenery_to_json(&f).to_string();
        let back = load_scenery(&text).unwrap();
        assert_eq!(back, f);

        let by_ones = load_scenery("{\"group\": \"Z7\", \"ones\": [0, 2]}").unwrap();
        assert_eq!(by_ones, f);
        assert!(load_scenery("{\"group\": \"Z7\"}").is_err());
        assert!(
            load_scenery("{\"group\": \"Z7\", \"bits\": [1,0,0,0,0,0,0], \"ones\": [0, 2]}")
                .is_err()
        );
    }

    #[test]
    fn verdict_json_shape() {
        let walk = StepDistribution::uniform_cycle(7, &[1, 2, 4]).unwrap();
        let verdict = analyze(&walk, 128).unwrap();
        let v = verdict_to_json(&verdict, walk.group(), true);
        assert_eq!(v["verdict"], "not_reconstructive");
        assert_eq!(v["mode"], "exact");
        assert!(v["fourier_table_exact"].is_array());
        let collisions = v["collisions"].as_array().unwrap();
        assert!(collisions
            .iter()
            .any(|c| c["x"] == "1" && c["y"] == "2" && c["multiplier"] == 2));
    }

    #[test]
    fn packed_bits_roundtrip() {
        let trace = WalkTrace {
            seed: 1,
            positions: vec![0; 11],
            observations: vec![1, 0, 1, 1, 0, 0, 0, 1, 1, 0, 1],
        };
        let packed = pack_observations(&trace);
        assert_eq!(packed.len(), 2);
        for (i, &o) in trace.observations.iter().enumerate() {
            assert_eq!((packed[i / 8] >> (i % 8)) & 1, o);
        }
    }
}
