"""Non-parametric estimation of consumer valuation distributions from
second-price auction standing-price sequences."""

from .arrival import (GTable, build_g_table, cached_g_table,
                      conditional_mean_jumps, estimate_lambda, g_eval,
                      g_inverse, load_g_table, save_g_table)
from .bands import (ConfidenceBand, MedianBiasEstimate, estimate_median_bias,
                    hulc_band, hulc_batches, write_band_csv)
from .errors import (NumericalError, SecondPriceError, TieError,
                     ValidationError)
from .ingest import (BidRow, CleaningReport, export_bid_log, export_dataset,
                     ingest_bid_csv, read_dataset)
from .initial import (LowReserveSelection, SpliceAnchors, combine_initial,
                      compute_splice_anchors, estimate_f_fp, estimate_f_sp,
                      g_lambda_cdf, g_lambda_inverse, initial_theta,
                      select_low_reserve)
from .metrics import (StudyReport, TrainTestReport, ks_distance,
                      replicate_table, train_test_eval, tv_distance,
                      write_report_csv)
from .mle import (AscentResult, LikelihoodContext, compute_A, coord_update,
                  coordinate_ascent, log_lik, reconstruct_cdf)
from .model import (AuctionRecord, MonotoneCurve, ObservedDataset, PooledData,
                    ThetaVector, break_ties, cdf_to_theta, has_ties,
                    interpolate, pool, theta_to_cdf, validate_auction)
from .pipeline import (FitResult, clip_theta0, default_epsilon,
                       default_g_table, fit, fit_initial)
from .simulate import (AuctionState, SimConfig, ValuationDistribution,
                       replay_bids, run_auction, run_study,
                       standing_price_update)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
