"""Limit-order-book laboratory.

A three-phase trading-session engine (opening call auction, cool period,
continuous double auction) with daily price limits, relative-price
measurement against phase-specific references, density and power-law
fitting tools, and a calibrated synthetic order-flow generator, so the
measure / model / simulate / re-measure loop runs end to end on one desk.
"""

from .book import BUY, SELL, Order, OrderBook, Trade
from .engine import (CallAuction, DayEngine, DayResult, DayRunner,
                     FrozenQuotes, PhaseOutcome, cda_place, clearing_price,
                     run_day)
from .errors import LobLabError
from .flowio import (FLOW_HEADER, FlowRecord, demux, load_flow, parse_flow,
                     write_flow)
from .market import (Phase, PriceBand, REL_PRICE_LIMIT, compute_band,
                     domain_bound, log_price, phase_of)
from .relprice import (PlacementRecord, RefContext, RelPriceSample,
                       annotate_context, reference_for, relative_price,
                       samples_from)
from .stats import (PdfEstimate, PowerLawFit, conditional_pdfs, estimate_pdf,
                    fit_power_law, group_by_context, ks_critical, mid_price,
                    spread, two_sample_ks, volatility)
from .synth import (GeneratorConfig, Mixture, SyntheticStream,
                    config_from_text, config_to_text, default_mixtures,
                    generate_day, load_config, sample_x, x_to_order)

__version__ = "0.1.0"
