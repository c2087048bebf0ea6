"""Behavioral simulator of an in-SRAM analog multiply-accumulate pipeline.

Layers, bottom up: device (DAC, staggered bitline discharge, charge
sharing), peripherals (accumulator, constraint checker, SAR ADC,
decoder), variation (seeded noise streams, Monte Carlo, error maps),
engine (array placement and grouped signed MAC), nn (quantization and
network inference on the MAC pipeline), perf (analytical delay/energy
comparison), cli (scripted front end).
"""

from .errors import (
    CapacityError,
    ConfigError,
    ConstraintError,
    FormatError,
    InputDomainError,
    PlacementError,
    SimError,
)
from .params import (
    FULL_SCALE_PRODUCT,
    AdcConfig,
    DeviceParams,
    NoiseSpec,
    default_adc_range,
    dump_config,
    load_config,
)
from .device import (
    dac_map,
    bitline_voltages,
    charge_share_raw,
    ideal_product_voltage,
    staggered_discharge_product,
    weight_to_bits,
)
from .peripherals import (
    AccumulatorState,
    ConstraintReport,
    accumulate,
    adc_code_table,
    check_constraints,
    decode_mac,
    decode_table,
    sar_adc,
    sar_adc_array,
)
from .variation import (
    MacDistribution,
    MacErrorMap,
    mac_error_sigma,
    monte_carlo_mac,
    perturb_analog,
    rng_stream,
    sample_error_map,
)
from .engine import (
    ArrayConfig,
    SignedWord,
    StoredMatrix,
    dot_product,
    eval_dot_product,
    exact_mac_oracle,
    mac_trace,
    store_weights,
)
from .quantize import QuantScheme, dequantize, quantize_linear
from .netspec import NetworkSpec, lenet5, load_network, perf_layers, trace_shapes, vgg_cifar10
from .inference import (
    BandReport,
    QuantizedNetwork,
    accuracy,
    accuracy_band,
    build_quantized,
    float_forward,
    forward,
    infer,
)
from .perf import (
    AreaTable,
    NetworkReport,
    PerfParams,
    compare_network,
    imac_delay,
    imac_energy,
    per_inference_energy,
    sweep_bio,
    vn_delay,
    vn_energy,
)
from .datasets import Dataset, load_dataset
from .tensorfile import load_tensors, save_tensors

__version__ = "1.0.0"
