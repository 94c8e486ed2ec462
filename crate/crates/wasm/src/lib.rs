//! Browser bindings for the fracture solver: closed-form thresholds, a
//! quasi-static traction run and the damage field it leaves behind.

use wasm_bindgen::prelude::*;

use phasefield::cases::{run_quasistatic, setup_traction, TractionParams};
use phasefield::model::{critical_traction, Material};
use phasefield::solver::{Method, SolverConfig};

fn material(ell: f64) -> Result<Material, JsError> {
    let m = Material::with_ell(ell);
    m.validate().map_err(|e| JsError::new(&e.to_string()))?;
    Ok(m)
}

/// Critical traction of a homogeneous bar for internal length `ell`
/// (unit modulus and toughness).
#[wasm_bindgen(js_name = criticalTraction)]
pub fn critical_traction_for(ell: f64) -> Result<f64, JsError> {
    Ok(critical_traction(&material(ell)?))
}

/// Result of a traction run. Per-step columns are flat arrays of equal length.
#[wasm_bindgen]
pub struct TractionRun {
    load: Vec<f64>,
    elastic: Vec<f64>,
    dissipated: Vec<f64>,
    am_iterations: Vec<f64>,
    vertices: Vec<f64>,
    triangles: Vec<u32>,
    alpha: Vec<f64>,
    failure: Option<String>,
}

#[wasm_bindgen]
impl TractionRun {
    #[wasm_bindgen(getter)]
    pub fn load(&self) -> Vec<f64> {
        self.load.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn elastic(&self) -> Vec<f64> {
        self.elastic.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn dissipated(&self) -> Vec<f64> {
        self.dissipated.clone()
    }

    #[wasm_bindgen(getter, js_name = amIterations)]
    pub fn am_iterations(&self) -> Vec<f64> {
        self.am_iterations.clone()
    }

    /// Vertex coordinates as `x0, y0, x1, y1, ...`.
    #[wasm_bindgen(getter)]
    pub fn vertices(&self) -> Vec<f64> {
        self.vertices.clone()
    }

    /// Vertex indices, three per triangle.
    #[wasm_bindgen(getter)]
    pub fn triangles(&self) -> Vec<u32> {
        self.triangles.clone()
    }

    /// Final damage per vertex.
    #[wasm_bindgen(getter)]
    pub fn alpha(&self) -> Vec<f64> {
        self.alpha.clone()
    }

    /// Solver failure message, if the run stopped early.
    #[wasm_bindgen(getter)]
    pub fn failure(&self) -> Option<String> {
        self.failure.clone()
    }
}

/// Loads the bar from zero to 1.5 t_c in `increments` steps with
/// over-relaxed alternate minimization.
#[wasm_bindgen(js_name = runTraction)]
pub fn run_traction(ell: f64, omega: f64, increments: usize) -> Result<TractionRun, JsError> {
    let err = |e: phasefield::Error| JsError::new(&e.to_string());
    if !(2..=200).contains(&increments) {
        return Err(JsError::new("increments must lie in 2..=200"));
    }
    let params = TractionParams {
        increments,
        ..TractionParams::default()
    };
    let setup = setup_traction(material(ell)?, &params).map_err(err)?;
    let method = if omega == 1.0 { Method::Am } else { Method::Oram };
    let config = SolverConfig::new(method, omega).map_err(err)?;
    let out = run_quasistatic(&setup, &config).map_err(err)?;
    let mesh = &out.problem.mesh;
    Ok(TractionRun {
        load: out.records.iter().map(|r| r.load).collect(),
        elastic: out.records.iter().map(|r| r.energy.elastic).collect(),
        dissipated: out.records.iter().map(|r| r.energy.dissipated).collect(),
        am_iterations: out.records.iter().map(|r| r.report.am_iterations as f64).collect(),
        vertices: mesh.vertices.iter().flat_map(|p| [p[0], p[1]]).collect(),
        triangles: mesh.triangles.iter().flat_map(|t| t.map(|v| v as u32)).collect(),
        alpha: out.state.alpha.clone(),
        failure: out.failure.map(|e| e.to_string()),
    })
}
