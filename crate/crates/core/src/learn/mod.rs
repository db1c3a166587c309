//! Noticeability predictors and their evaluation.

mod cv;
mod psychometric;
mod select;
mod smo;
mod standardize;
mod svc;
mod svr;

pub use cv::{accuracy, louo_classify, louo_cv, louo_svr, macro_f1, mse, users_of, CvReport, Fold, Metric, Prediction};
pub use psychometric::{logistic, psychometric_fit, Psychometric, ALPHA_RANGE, BETA_RANGE};
pub use select::{
    category_subsets, category_unions, rank, rank_order, select_categories, select_features, select_within_category,
    CategoryChoice, Scored, Selection,
};
pub use smo::{default_gamma, rbf};
pub use standardize::{standardize_fit_apply, Standardizer, STD_FLOOR};
pub use svc::{
    classify_predict, classify_train, classify_train_labels, ClassifierModel, PairMachine, Scheme, SvcParams,
};
pub use svr::{svr_predict, svr_train, SvrModel, SvrParams};

pub use crate::stats::pearson_r;
