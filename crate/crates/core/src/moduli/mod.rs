//! Theta-constant and gradient maps on the moduli space, their Pluecker
//! coordinates, and reconstruction of theta constants from gradient frames.

mod maps;
mod projective;
mod reconstruct;

pub use maps::{
    jacobian_det, jacobian_det_from_rows, minors, phi_map, pluecker, subsets, th_map, GradientFrame, PlueckerVector,
    FRAME_RANK_FLOOR,
};
pub use projective::{ProjectivePoint, ZERO_FLOOR};
pub use reconstruct::{
    cyclic_system, direct_constants, direct_products, invert_phi_genus_one, product_witness, product_admissible,
    product_reconstruction, rank_check, reconstruct_constants, separation_probe, RankCheck, SeparationProbe,
    KERNEL_GAP, RANK_RATIO_FLOOR,
};
