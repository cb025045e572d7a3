#
# This file defines all of the default configuration variables for
# encoding, training, data generation, metering and projection
#

LABELS = ("low", "average", "high")  # fixed label order used everywhere

# hyperdimensional encoding
DEFAULT_DIMENSION = 10000
DEFAULT_ENCODER_MODE = "nonlinear"  # or "linear"
DEFAULT_DTYPE = "float32"  # hypervector element type (or "float64")
ENCODE_CHUNK_ROWS = 256  # rows per matrix product in batch encoding

# class-hypervector training
DEFAULT_LEARNING_RATE = 0.05
DEFAULT_MAX_EPOCHS = 20
DEFAULT_PATIENCE = 3
RETRAIN_CHUNK_ROWS = 256  # look-ahead rows when searching the next mispredict

# signal pipeline
DEFAULT_SAMPLE_RATE_HZ = 500.0
DEFAULT_WINDOW = 50  # samples per n-gram window
DEFAULT_TRAIN_FRACTION = 0.8
DEFAULT_DDOF = 0  # 0 = population standard deviation for z-scores
Z_LOW = -1.0
Z_HIGH = 1.0

# synthetic recordings (stand-in for the machining data)
SYNTH_CHANNELS = 8
SYNTH_SAMPLES = 2000
SYNTH_NOISE = 0.05
SYNTH_PARTS_PER_CLASS = 6  # 18 parts in total
SYNTH_FEATURES = ("counterbore",)
SYNTH_NOMINAL_DEVIATION_MM = 0.05
SYNTH_DEVIATION_SPREAD_MM = 0.02  # distance between class centres
SYNTH_DEVIATION_JITTER = 0.05  # fraction of the spread

# energy metering
DEFAULT_POWER_WATTS = 65.0  # TDP-like constant power of a laptop CPU
DEFAULT_SAMPLING_INTERVAL = 0.05  # seconds
DEFAULT_REPETITIONS = 10
POWERCAP_ROOT = "/sys/class/powercap"

# baseline multilayer perceptron
MLP_HIDDEN = (128,)
MLP_ACTIVATION = "relu"
MLP_EPOCHS = 100
MLP_BATCH_SIZE = 32
MLP_LEARNING_RATE = 0.05
GRADCHECK_STEP = 1e-4
GRADCHECK_PARAMS = 100

# fleet projection
JOULES_PER_KWH = 3.6e6
DEFAULT_CO2_KG_PER_KWH = 0.7  # 7000 t / 1e7 kWh
CO2_TONS_PER_CAR_YEAR = 4.6  # typical passenger vehicle, per year

# reproducibility: named subsystems that receive a seed from the root seed
SEED_STREAMS = ("synth", "basis", "balance", "split", "fit", "mlp")
DEFAULT_ROOT_SEED = 42
