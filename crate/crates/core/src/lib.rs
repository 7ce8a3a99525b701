//! Longitudinal analysis of website privacy policies.
//!
//! The crate covers the whole path from a list of sites to a corpus report:
//! finding policy links and their archived monthly snapshots ([`corpus`]),
//! gating pages that are English privacy policies ([`policygate`]), picking
//! a before/after pair around a pivot month ([`changedetect`]), measuring
//! text features ([`textmetrics`]), evaluating structured label queries
//! over annotated segments ([`queryengine`]), and testing the differences
//! ([`stats`], [`report`]).

pub mod annotation;
pub mod changedetect;
pub mod corpus;
pub mod http;
pub mod policygate;
pub mod queryengine;
pub mod report;
pub mod stats;
pub mod taxonomy;
pub mod textmetrics;
pub mod yearmonth;

pub use taxonomy::{load_taxonomy, CategoryId, Taxonomy};
pub use yearmonth::YearMonth;
