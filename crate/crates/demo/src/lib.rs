//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Every export takes plain numbers or text and returns numbers or a JSON
//! string, so the same functions are usable (and tested) natively.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use pasldpc::constellation::{operating_pmf, AskConstellation, CodeRate};
use pasldpc::protograph::{gap_curve, BaseMatrix, ThresholdSearch};
use pasldpc::rates::curve_rows;
use pasldpc::step_grid;

pub mod api {
    use super::*;

    #[derive(Debug, Serialize)]
    pub struct Pmf {
        pub points: Vec<f64>,
        pub probs: Vec<f64>,
        pub entropy: f64,
    }

    #[derive(Debug, Serialize)]
    pub struct GapPoint {
        #[serde(rename = "R")]
        pub se: f64,
        pub gap_db: f64,
    }

    pub fn code_rate(num: u32, den: u32) -> pasldpc::Result<CodeRate> {
        CodeRate::new(num, den)
    }

    /// MB operating PMF for spectral efficiency `se`.
    pub fn mb_pmf(se: f64, num: u32, den: u32, m: usize) -> pasldpc::Result<Pmf> {
        let pmf = operating_pmf(se, code_rate(num, den)?, m)?;
        let c = AskConstellation::new(m)?;
        Ok(Pmf {
            points: c.points().to_vec(),
            probs: pmf.probs().to_vec(),
            entropy: pmf.entropy(),
        })
    }

    pub fn rate_curve(
        num: u32,
        den: u32,
        m: usize,
        start: f64,
        stop: f64,
        step: f64,
    ) -> pasldpc::Result<String> {
        let rows = curve_rows(code_rate(num, den)?, m, &step_grid(start, stop, step)?)?;
        Ok(serde_json::to_string(&rows).expect("rows serialise"))
    }

    pub fn threshold_curve(
        matrix: &str,
        num: u32,
        den: u32,
        m: usize,
        start: f64,
        stop: f64,
        step: f64,
    ) -> pasldpc::Result<String> {
        let base: BaseMatrix = matrix.parse()?;
        let search = ThresholdSearch {
            resolution_db: 0.05,
            ..ThresholdSearch::default()
        };
        let points: Vec<GapPoint> = gap_curve(
            &base,
            &step_grid(start, stop, step)?,
            code_rate(num, den)?,
            m,
            &search,
        )?
        .into_iter()
        .map(|(se, gap_db)| GapPoint { se, gap_db })
        .collect();
        Ok(serde_json::to_string(&points).expect("points serialise"))
    }
}

fn js_err(e: pasldpc::Error) -> JsError {
    JsError::new(&e.to_string())
}

/// JSON `{points, probs, entropy}` of the operating PMF.
#[wasm_bindgen(js_name = mbPmf)]
pub fn mb_pmf(se: f64, num: u32, den: u32, m: usize) -> Result<String, JsError> {
    let pmf = api::mb_pmf(se, num, den, m).map_err(js_err)?;
    Ok(serde_json::to_string(&pmf).expect("pmf serialises"))
}

/// JSON rows of required SNR and gaps, shaped versus uniform.
#[wasm_bindgen(js_name = rateCurve)]
pub fn rate_curve(
    num: u32,
    den: u32,
    m: usize,
    start: f64,
    stop: f64,
    step: f64,
) -> Result<String, JsError> {
    api::rate_curve(num, den, m, start, stop, step).map_err(js_err)
}

/// JSON `[{R, gap_db}]` of PEXIT threshold gaps for a base matrix in text form.
#[wasm_bindgen(js_name = thresholdCurve)]
pub fn threshold_curve(
    matrix: &str,
    num: u32,
    den: u32,
    m: usize,
    start: f64,
    stop: f64,
    step: f64,
) -> Result<String, JsError> {
    api::threshold_curve(matrix, num, den, m, start, stop, step).map_err(js_err)
}

/// Text form of the built-in robust base matrix, for the editor.
#[wasm_bindgen(js_name = robustMatrix)]
pub fn robust_matrix() -> String {
    pasldpc::protograph::robust_base_matrix().to_string()
}
