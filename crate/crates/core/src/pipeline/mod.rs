//! Orchestration: configuration, datasets, training, evaluation, ablation
//! sweeps and the theory report.

mod commands;
mod config;
mod data;
mod eval;
mod train;

pub use commands::{
    ablation_csv, cmd_ablate, cmd_denoise, cmd_eval, cmd_eval_files, cmd_generate, cmd_theory, cmd_train, load_model, save_model,
    train_and_score, AblationRow, CheckpointMeta, EvalFiles, ABLATION_FILE, EVAL_FILE, MODEL_FILE, THEORY_FILE, TIMING_FILE,
    TRAIN_LOG_FILE,
};
pub use config::{
    AblationConfig, DataConfig, EvalConfig, LossConfig, NoiseSpec, PathsConfig, RunConfig, ShapeSpec, TheoryConfig, TrainConfig,
};
pub use data::{
    build_heldout, build_training, read_dataset, read_manifest, write_dataset, EvalCase, Manifest, ManifestEntry, TrainingEntry,
    MANIFEST_FILE,
};
pub use eval::{denoise_iterations, eval_csv, evaluate_case, evaluate_model, metric_report, EvalRow, EVAL_CSV_HEADER};
pub use train::{draw_batch, pair_loss_and_grads, train, EpochLog, MidpointStats, PairDraw, PairLoss, TrainOptions, TrainOutcome};
