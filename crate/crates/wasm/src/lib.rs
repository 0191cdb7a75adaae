//! Browser bindings for the demo page in `www/`.

use wasm_bindgen::prelude::*;

use hlv_core::disagreement::{bernoulli_jsd, squared_error};
use hlv_core::model::{AnnotationTable, QuestionSpec};
use hlv_core::reliability::{krippendorff_alpha, DEFAULT_THRESHOLD};
use hlv_core::synth::{generate_panel, PanelSpec};

const YES: i8 = 1;
const NO: i8 = 0;
const MISSING: i8 = -1;

fn js(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

fn plan(total_frames: f64, fps: f64, max_frames: f64) -> Result<Vec<f64>, String> {
    if !(total_frames >= 0.0 && max_frames >= 0.0) || total_frames.fract() != 0.0 || max_frames.fract() != 0.0 {
        return Err("frame counts must be non-negative integers".into());
    }
    let plan = hlv_core::plan_frames(total_frames as u64, fps, max_frames as u64).map_err(|e| e.to_string())?;
    Ok(plan.indices.iter().map(|&i| i as f64).collect())
}

/// Sampled frame indices for a video of `total_frames` at `fps`, capped at `max_frames`.
#[wasm_bindgen(js_name = framePlan)]
pub fn frame_plan(total_frames: f64, fps: f64, max_frames: f64) -> Result<Vec<f64>, JsError> {
    plan(total_frames, fps, max_frames).map_err(js)
}

/// Squared error against `p_human` at `steps + 1` evenly spaced `p_model` values in `[0, 1]`.
#[wasm_bindgen(js_name = brierCurve)]
pub fn brier_curve(p_human: f64, steps: usize) -> Vec<f64> {
    curve(steps, |p| squared_error(p, p_human))
}

#[wasm_bindgen(js_name = jsdCurve)]
pub fn jsd_curve(p_human: f64, steps: usize) -> Vec<f64> {
    curve(steps, |p| bernoulli_jsd(p, p_human))
}

fn curve(steps: usize, f: impl Fn(f64) -> f64) -> Vec<f64> {
    let steps = steps.max(1);
    (0..=steps).map(|k| f(k as f64 / steps as f64)).collect()
}

/// Editable binary annotation panel. Cells are 1 (yes), 0 (no) or -1 (missing).
#[wasm_bindgen]
pub struct Panel {
    items: usize,
    annotators: usize,
    cells: Vec<i8>,
}

#[wasm_bindgen]
impl Panel {
    /// Random panel where each item leans towards one label by `sharpness`.
    #[wasm_bindgen(constructor)]
    pub fn new(items: usize, annotators: usize, sharpness: f64, missing: f64, seed: u32) -> Result<Panel, JsError> {
        Panel::generate(items, annotators, sharpness, missing, seed as u64).map_err(js)
    }

    fn generate(items: usize, annotators: usize, sharpness: f64, missing: f64, seed: u64) -> Result<Panel, String> {
        let spec = PanelSpec::polarized(items, annotators, sharpness, missing, seed).map_err(|e| e.to_string())?;
        let table = generate_panel(&QuestionSpec::binary("demo"), &spec).map_err(|e| e.to_string())?;
        let cells = (0..items)
            .flat_map(|i| {
                table
                    .row(i)
                    .iter()
                    .map(|c| match c.label() {
                        Some("yes") => YES,
                        Some(_) => NO,
                        None => MISSING,
                    })
                    .collect::<Vec<_>>()
            })
            .collect();
        Ok(Panel {
            items,
            annotators,
            cells,
        })
    }

    #[wasm_bindgen(getter)]
    pub fn items(&self) -> usize {
        self.items
    }

    #[wasm_bindgen(getter)]
    pub fn annotators(&self) -> usize {
        self.annotators
    }

    /// Row-major cell values.
    pub fn cells(&self) -> Vec<i8> {
        self.cells.clone()
    }

    /// Cycles a cell yes -> no -> missing -> yes and returns the new value.
    pub fn toggle(&mut self, item: usize, annotator: usize) -> i8 {
        if item >= self.items || annotator >= self.annotators {
            return MISSING;
        }
        let c = &mut self.cells[item * self.annotators + annotator];
        *c = match *c {
            YES => NO,
            NO => MISSING,
            _ => YES,
        };
        *c
    }

    /// Krippendorff's alpha, or NaN when no item has two labels.
    pub fn alpha(&self) -> f64 {
        krippendorff_alpha(&self.table()).map_or(f64::NAN, |s| s.value)
    }

    /// "agreement", "disagreement", or "undefined" at `threshold` (default when not finite).
    pub fn subset(&self, threshold: f64) -> String {
        let t = if threshold.is_finite() {
            threshold
        } else {
            DEFAULT_THRESHOLD
        };
        let a = self.alpha();
        if a.is_nan() {
            "undefined"
        } else if a >= t {
            "agreement"
        } else {
            "disagreement"
        }
        .to_string()
    }

    /// Per-item share of "yes" among present labels; NaN for empty items.
    #[wasm_bindgen(js_name = softLabels)]
    pub fn soft_labels(&self) -> Vec<f64> {
        self.cells
            .chunks(self.annotators)
            .map(|row| {
                let present = row.iter().filter(|&&c| c != MISSING).count();
                let yes = row.iter().filter(|&&c| c == YES).count();
                if present == 0 {
                    f64::NAN
                } else {
                    yes as f64 / present as f64
                }
            })
            .collect()
    }

    fn table(&self) -> AnnotationTable {
        let rows: Vec<Vec<Option<&str>>> = self
            .cells
            .chunks(self.annotators)
            .map(|row| {
                row.iter()
                    .map(|&c| match c {
                        YES => Some("yes"),
                        NO => Some("no"),
                        _ => None,
                    })
                    .collect()
            })
            .collect();
        AnnotationTable::from_options(
            "demo",
            (0..self.items).map(|i| format!("item-{i}")).collect(),
            (0..self.annotators).map(|a| format!("ann-{a}")).collect(),
            &rows,
        )
        .expect("panel ids are unique and rows are rectangular")
    }
}
