"""Bayesian two-layer ReLU regression with hyperplanes drawn from a Poisson
hyperplane process, fitted by annealed sequential Monte Carlo."""
from .data import Dataset, gen_simulation, load_csv, normalize_to_ball, train_test_split
from .decomposition import (DecompFit, fit_domain_decomp, fit_intensity_decomp, predict_domain_decomp,
                            predict_intensity_decomp)
from .evaluation import coverage, mean_ci_length, posterior_predictive, rmse
from .fitting import Fit, SMCConfig, fit_model
from .geometry import (DomainPartition, Hyperplane, HyperplaneSet, feature_map, relu, restrict,
                       sample_hyperplane, sample_php, sample_unit_normal, superpose)
from .inference import (AnnealingSchedule, ParticleEnsemble, annealed_smc, ess, gibbs_run, gibbs_sigma_sq,
                        gibbs_weight, make_schedule, mcmc_run, mh_step, resample_multinomial)
from .model import Hyperparams, ModelParams, log_likelihood, predict_point, sample_prior

__version__ = "0.1.0"
