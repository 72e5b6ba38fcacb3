//! Multi-item multi-bidder auction mechanisms built around best-guess
//! bidder reductions: value distributions and their revenue benchmarks,
//! concrete mechanisms (Vickrey, threshold bundling, second-price
//! bundling), menu transforms, exact LP revenue oracles on finite type
//! spaces, and Monte Carlo estimation.

pub mod derived;
pub mod dist;
pub mod error;
pub mod io;
pub mod joint;
pub mod lp;
pub mod mc;
pub mod mech;
pub mod menu;
pub mod oracle;
pub mod product;
pub mod reduction;
pub mod rng;

pub use derived::{a_c_ell, closed_form_revenue, fact7_b, hat_of, r_of, DerivedQuantities};
pub use dist::{DiscreteDist, Dist1D};
pub use error::{Error, Result};
pub use joint::{
    best_of_others, second_highest, second_price_stats, JointValuation, SecondPriceStats,
    TopTwo, ValuationMatrix,
};
pub use mc::{estimate_revenue, spb_sweep, Estimate};
pub use mech::{
    bund_optimize, m_beta_w, m_beta_w_plain, spb, spb_choose_w, vickrey, BundlingParams,
    Cutoff, Outcome, TieRule,
};
pub use menu::{phi_beta, profitable_transform, Menu, MenuEntry, TransformParams};
pub use oracle::{
    bg_quantities, drev_1bidder, fx_beta, rev_1bidder, rev_a, rev_bic, rev_dsic, rev_x, srev,
    LpResult, OracleStatus,
};
pub use product::{DiscreteKd, ProductDist};
pub use reduction::{
    bg_select, check_ic_ir, BestGuessReduction, BgChoice, Dbgr, MechDescriptor, PreparedMech,
};
