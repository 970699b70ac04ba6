pub mod assembly;
pub mod chidenn;
pub mod linalg;
pub mod mesh;
pub mod movingsource;
pub mod problems;
pub mod quadrature;
mod scalar;

pub use scalar::Scalar;
pub mod mlvms;
pub mod norms;
pub mod td;

pub type SolveSettingsF64 = mlvms::SolveSettings;
pub type LevelStateF64 = mlvms::LevelState<f64>;
pub type LevelStateF32 = mlvms::LevelState<f32>;
pub type MultilevelMeshF64 = mesh::MultilevelMesh<f64>;
pub type MultilevelMeshF32 = mesh::MultilevelMesh<f32>;
pub type ProblemF64 = problems::ManufacturedProblem<f64>;
pub type ProblemF32 = problems::ManufacturedProblem<f32>;
pub type TensorBasisF64 = chidenn::TensorBasis<f64>;
pub type TensorBasisF32 = chidenn::TensorBasis<f32>;
pub type TdSolutionF64 = td::TDSolution<f64>;
pub type TdSolutionF32 = td::TDSolution<f32>;
