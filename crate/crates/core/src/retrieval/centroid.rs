use ndarray::Array4;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::SpatialGrid;

/// Signal centroid for one idler post-selection.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CentroidRow {
    pub idler_index: [usize; 2],
    /// mm
    pub idler: [f64; 2],
    /// mm
    pub centroid: [f64; 2],
    /// Per axis: the centroid lies on the opposite side of the origin from
    /// the idler. `None` where the idler coordinate is zero.
    pub opposite: [Option<bool>; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CentroidTable {
    pub rows: Vec<CentroidRow>,
}

impl CentroidTable {
    /// Every off-axis post-selection moved the signal the other way.
    pub fn all_opposite(&self) -> bool {
        self.rows.iter().flat_map(|r| r.opposite).all(|o| o != Some(false))
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("idler_ix,idler_iy,idler_x_mm,idler_y_mm,centroid_x_mm,centroid_y_mm,opposite_x,opposite_y\n");
        let flag = |o: Option<bool>| o.map_or("", |b| if b { "yes" } else { "no" });
        for r in &self.rows {
            s.push_str(&format!(
                "{},{},{},{},{:.9},{:.9},{},{}\n",
                r.idler_index[0],
                r.idler_index[1],
                r.idler[0],
                r.idler[1],
                r.centroid[0],
                r.centroid[1],
                flag(r.opposite[0]),
                flag(r.opposite[1])
            ));
        }
        s
    }
}

/// Intensity-weighted signal centroids for each idler position.
///
/// `intensity` is indexed `[x_s, y_s, x_i, y_i]` over the two grids.
pub fn centroid_analysis(intensity: &Array4<f64>, signal: &SpatialGrid, idler: &SpatialGrid) -> Result<CentroidTable> {
    if intensity.dim() != (signal.n_x, signal.n_y, idler.n_x, idler.n_y) {
        return Err(Error::contract(format!(
            "intensity shape {:?} does not match the grids",
            intensity.dim()
        )));
    }
    if let Some(v) = intensity.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
        return Err(Error::contract(format!("intensities must be finite and >= 0, found {v}")));
    }
    let mut rows = Vec::with_capacity(idler.len());
    for q in idler.points() {
        let (mut w, mut x, mut y) = (0.0, 0.0, 0.0);
        for i in 0..signal.n_x {
            for j in 0..signal.n_y {
                let p = intensity[[i, j, q[0], q[1]]];
                w += p;
                x += p * signal.x(i);
                y += p * signal.y(j);
            }
        }
        if w == 0.0 {
            return Err(Error::ZeroTotal(format!("conditional signal intensity for idler index {q:?}")));
        }
        let idler_mm = [idler.x(q[0]), idler.y(q[1])];
        let centroid = [x / w, y / w];
        let opposite = [0, 1].map(|c| (idler_mm[c] != 0.0).then(|| centroid[c] * idler_mm[c] < 0.0));
        rows.push(CentroidRow {
            idler_index: q,
            idler: idler_mm,
            centroid,
            opposite,
        });
    }
    Ok(CentroidTable { rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spdc::{joint_spatial_amplitude, JointSpatialSpec};

    fn table(spec: &JointSpatialSpec, g: &SpatialGrid) -> CentroidTable {
        let a = joint_spatial_amplitude(spec, g, g).unwrap();
        centroid_analysis(&a.values.mapv(|v| v.norm_sqr()), g, g).unwrap()
    }

    #[test]
    fn symmetric_input_is_centred() {
        let g = SpatialGrid::default();
        let t = table(&JointSpatialSpec::default(), &g);
        let r = t.rows.iter().find(|r| r.idler_index == g.origin()).unwrap();
        assert!(r.centroid[0].abs() < 1e-12 && r.centroid[1].abs() < 1e-12);
        assert_eq!(r.opposite, [None, None]);
    }

    #[test]
    fn signal_moves_against_idler() {
        let g = SpatialGrid::default();
        let t = table(&JointSpatialSpec::default(), &g);
        let r = t.rows.iter().find(|r| r.idler == [0.5, 0.5]).unwrap();
        assert!(r.centroid[0] < 0.0 && r.centroid[1] < 0.0, "{:?}", r.centroid);
        assert!(t.all_opposite());
    }

    #[test]
    fn matches_conditional_gaussian_closed_form() {
        // Fine, wide signal grid so the sampled mean equals the continuous one.
        let spec = JointSpatialSpec::default();
        let fine = SpatialGrid::new(101, 101, 0.1).unwrap();
        let idler = SpatialGrid::default();
        let a = joint_spatial_amplitude(&spec, &fine, &idler).unwrap();
        let t = centroid_analysis(&a.values.mapv(|v| v.norm_sqr()), &fine, &idler).unwrap();
        for r in &t.rows {
            let m = spec.conditional_mean(r.idler);
            for c in 0..2 {
                assert!((r.centroid[c] - m[c]).abs() < 1e-6, "{:?} {m:?}", r.centroid);
            }
        }
    }

    #[test]
    fn zero_total_is_error() {
        let g = SpatialGrid::default();
        let z = Array4::zeros((7, 7, 7, 7));
        assert!(matches!(centroid_analysis(&z, &g, &g), Err(Error::ZeroTotal(_))));
    }

    #[test]
    fn negative_intensity_is_rejected() {
        let g = SpatialGrid::default();
        let mut z = Array4::from_elem((7, 7, 7, 7), 1.0);
        z[[0, 0, 0, 0]] = -1.0;
        assert!(matches!(centroid_analysis(&z, &g, &g), Err(Error::Contract(_))));
    }

    #[test]
    fn csv_has_a_row_per_idler() {
        let g = SpatialGrid::default();
        let csv = table(&JointSpatialSpec::default(), &g).to_csv();
        assert_eq!(csv.lines().count(), 1 + g.len());
    }
}
