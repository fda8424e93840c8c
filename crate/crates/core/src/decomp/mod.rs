//! Tensor decompositions (HOSVD, CP, TT), their generalized forms for
//! even-order paired tensors, and the rank machinery built on them.

mod cp;
mod generalized;
mod hosvd;
mod rank;
mod tt;

pub use cp::{cp_als, cp_rank_search, cp_to_full, khatri_rao, CpFactors, CpOptions};
pub use generalized::{
    einstein_compose_cpd, einstein_compose_ttd, gen_cpd_to_full, gen_ttd_to_full, generalized_cpd,
    generalized_cpd_search, generalized_ttd, GenCpFactors, GenTtCores,
};
pub use hosvd::{hosvd, multilinear_ranks, HosvdResult};
pub use rank::{cpd_rank_certificate, cpd_rank_certificate_order2n, k_rank, ttd_permuted, unfolding_rank_via_ttd, Certificate};
pub use tt::{tt_left_orthonormalize, tt_right_orthonormalize, tt_svd, tt_to_full, Truncation, TtCores};
