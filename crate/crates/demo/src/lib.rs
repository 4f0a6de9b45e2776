//! wasm-bindgen surface for the static page in `www/`.
//!
//! Each export returns a JSON string. The `*_json` functions carry the logic
//! and stay callable from native tests.

use fupcon::arith::{parse_rational, Moduli, Rational};
use fupcon::lifting::{image_set_guarded, PLLoop, WindingVector};
use fupcon::report::{cmd_certify, cmd_combine, parse_list, parse_loops, CertifyConfig};
use fupcon::torus::SegmentSet;
use num_traits::ToPrimitive;
use serde_json::json;
use wasm_bindgen::prelude::*;

/// Smaller than the CLI default so the page stays responsive.
pub const DEMO_GUARD: u64 = 200_000;

fn moduli(s: &str) -> Result<Moduli, String> {
    Moduli::new(parse_list(s, "moduli").map_err(|e| e.to_string())?).map_err(|e| e.to_string())
}

fn winding(s: &str) -> Result<WindingVector, String> {
    Ok(WindingVector::new(parse_list(s, "winding").map_err(|e| e.to_string())?))
}

fn f(x: &Rational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Cuts a cover segment at every integer coordinate crossing and shifts
/// each piece into the unit square.
fn unit_square_pieces(start: &[Rational], end: &[Rational]) -> Vec<[f64; 4]> {
    let d: Vec<Rational> = end.iter().zip(start).map(|(e, s)| e - s).collect();
    let mut cuts = vec![Rational::from_integer(0.into()), Rational::from_integer(1.into())];
    for i in 0..2 {
        if d[i] == Rational::from_integer(0.into()) {
            continue;
        }
        let (lo, hi) = if start[i] < end[i] { (&start[i], &end[i]) } else { (&end[i], &start[i]) };
        let mut k = lo.floor() + Rational::from_integer(1.into());
        while &k < hi {
            cuts.push((&k - &start[i]) / &d[i]);
            k += Rational::from_integer(1.into());
        }
    }
    cuts.sort();
    cuts.dedup();
    let at = |t: &Rational| -> Vec<Rational> { start.iter().zip(&d).map(|(s, v)| s + v * t).collect() };
    cuts.windows(2)
        .map(|w| {
            let (a, b) = (at(&w[0]), at(&w[1]));
            let mid: Vec<Rational> = a.iter().zip(&b).map(|(x, y)| (x + y) / Rational::from_integer(2.into())).collect();
            let shift: Vec<Rational> = mid.iter().map(|m| m.floor()).collect();
            [f(&(&a[0] - &shift[0])), f(&(&a[1] - &shift[1])), f(&(&b[0] - &shift[0])), f(&(&b[1] - &shift[1]))]
        })
        .collect()
}

fn drawable(set: &SegmentSet) -> serde_json::Value {
    let pieces: Vec<[f64; 4]> = set
        .segments()
        .iter()
        .flat_map(|s| unit_square_pieces(s.start(), s.end()))
        .collect();
    let points: Vec<[f64; 2]> = set
        .points()
        .iter()
        .map(|p| [f(p.coord(0).value()), f(p.coord(1).value())])
        .collect();
    json!({
        "pieces": pieces,
        "points": points,
        "components": set.component_count(),
        "arcs": set.arc_count(),
        "csv": set.to_csv(),
    })
}

/// `Im γ^{(n)}` of the straight loop, or its `f`-preimage, ready to draw.
pub fn torus_image_json(moduli_s: &str, winding_s: &str, stage: u32, preimage: bool) -> Result<String, String> {
    let mm = moduli(moduli_s)?;
    let s = winding(winding_s)?;
    if mm.rank() != 2 || s.rank() != 2 {
        return Err("the drawing needs exactly two moduli and two winding entries".into());
    }
    let mut set = image_set_guarded(&PLLoop::straight(&s), stage, &mm, None, DEMO_GUARD).map_err(|e| e.to_string())?;
    if preimage {
        set = set.preimage(&mm).map_err(|e| e.to_string())?;
    }
    Ok(drawable(&set).to_string())
}

/// The certify report for stages `from..=to`.
pub fn certify_json(moduli_s: &str, winding_s: &str, from: u32, to: u32) -> Result<String, String> {
    if from > to {
        return Err("empty stage range".into());
    }
    let cfg = CertifyConfig {
        moduli: moduli(moduli_s)?,
        winding: winding(winding_s)?,
        range: (from, to),
        guard: DEMO_GUARD,
    };
    cmd_certify(&cfg).map(|r| r.to_json()).map_err(|e| e.to_string())
}

/// The combine report for loops written as `"3,0;-2,1"`.
pub fn combine_json(loops: &str) -> Result<String, String> {
    let loops = parse_loops(loops).map_err(|e| e.to_string())?;
    cmd_combine(&loops).map(|r| r.to_json()).map_err(|e| e.to_string())
}

/// Parses `p/q` and echoes it reduced; the page uses it to validate input.
pub fn normalize_rational(s: &str) -> Result<String, String> {
    parse_rational(s).map(|r| fupcon::arith::format_rational(&r)).map_err(|e| e.to_string())
}

#[wasm_bindgen]
pub fn torus_image(moduli: &str, winding: &str, stage: u32, preimage: bool) -> Result<String, JsValue> {
    torus_image_json(moduli, winding, stage, preimage).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn certify_summary(moduli: &str, winding: &str, from: u32, to: u32) -> Result<String, JsValue> {
    certify_json(moduli, winding, from, to).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn combine_loops(loops: &str) -> Result<String, JsValue> {
    combine_json(loops).map_err(|e| JsValue::from_str(&e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::Value;

    #[test]
    fn diagonal_preimage_is_one_component() {
        let v: Value = serde_json::from_str(&torus_image_json("2,3", "1,1", 0, true).unwrap()).unwrap();
        assert_eq!(v["components"], 1);
        // a (3,2) line crosses the square in 3 + 2 - 1 = 4 pieces
        assert_eq!(v["pieces"].as_array().unwrap().len(), 4);
        for p in v["pieces"].as_array().unwrap() {
            for x in p.as_array().unwrap() {
                let x = x.as_f64().unwrap();
                assert!((0.0..=1.0).contains(&x));
            }
        }
    }

    #[test]
    fn low_stage_preimage_splits() {
        let v: Value = serde_json::from_str(&torus_image_json("2,3", "2,3", 0, true).unwrap()).unwrap();
        assert_eq!(v["components"], 6);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(torus_image_json("4,6", "1,1", 0, false).is_err());
        assert!(torus_image_json("2,3,5", "1,1,1", 0, false).is_err());
        assert!(combine_json("0,1;1,1").is_err());
        assert!(certify_json("2,3", "2,3", 2, 1).is_err());
    }

    #[test]
    fn reports_round_trip() {
        let v: Value = serde_json::from_str(&combine_json("3,0;-2,1").unwrap()).unwrap();
        assert_eq!(v["results"]["final"], serde_json::json!(["-5/1", "4/1"]));
        let v: Value = serde_json::from_str(&certify_json("2,3", "2,3", 0, 1).unwrap()).unwrap();
        assert_eq!(v["results"]["minimal_level"], "1/1");
        assert_eq!(normalize_rational("2/4").unwrap(), "1/2");
    }
}
