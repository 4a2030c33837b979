#![allow(dead_code)]

use rand::Rng;
use rand_distr::StandardNormal;
use srkmmv_core::classify::{build_dictionary, ClassDictionary, ClassId};
use srkmmv_core::sampling::SeededRng;
use srkmmv_core::{DenseMatrix, Vector};

/// Class-mean-plus-noise model: each class has a N(0, 1) mean in `dim`
/// dimensions; every training sample and test frame is its class mean plus
/// `noise` times N(0, 1).
pub struct ClassModel {
    pub means: Vec<Vec<f64>>,
    pub noise: f64,
}

impl ClassModel {
    pub fn new(classes: usize, dim: usize, noise: f64, rng: &mut SeededRng) -> Self {
        let means = (0..classes)
            .map(|_| (0..dim).map(|_| rng.sample(StandardNormal)).collect())
            .collect();
        ClassModel { means, noise }
    }

    pub fn draw(&self, class: usize, rng: &mut SeededRng) -> Vector {
        let v = self.means[class]
            .iter()
            .map(|m| m + self.noise * rng.sample::<f64, _>(StandardNormal))
            .collect();
        Vector::new(v).unwrap()
    }

    pub fn dictionary(&self, per_class: usize, rng: &mut SeededRng) -> ClassDictionary {
        let samples: Vec<(ClassId, Vector)> = (0..self.means.len())
            .flat_map(|c| (0..per_class).map(move |_| c))
            .map(|c| (c, self.draw(c, rng)))
            .collect();
        build_dictionary(&samples).unwrap()
    }

    pub fn sequence(&self, class: usize, frames: usize, rng: &mut SeededRng) -> DenseMatrix {
        let cols: Vec<Vector> = (0..frames).map(|_| self.draw(class, rng)).collect();
        DenseMatrix::from_columns(&cols.iter().collect::<Vec<_>>()).unwrap()
    }
}
