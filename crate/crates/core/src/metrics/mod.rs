//! Chamfer distance, exact earth mover's distance and point-to-mesh distance.

mod chamfer;
mod emd;
mod p2m;
mod report;

pub use chamfer::{chamfer, chamfer_points, differentiable_chamfer, nearest_indices};
pub use emd::{emd, emd_points, hungarian, Assignment, DEFAULT_EMD_CAP};
pub use p2m::{closest_point_on_triangle, point_to_mesh, point_to_mesh_points};
pub use report::{MetricReport, CSV_HEADER, E5};
