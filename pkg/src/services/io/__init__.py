from src.services.io.csv_export import emit_csv
from src.services.io.datasets import (
    corrupt_dataset,
    gen_dataset,
    load_images,
    load_noisy,
    synthetic_image,
)
from src.services.io.pgm import quantize, read_levels, read_pgm, write_pgm
from src.services.io.run_config import (
    load_run_config,
    parse_run_config,
    save_run_config,
    serialize_run_config,
)
from src.services.io.tensor_file import (
    decode_tensor,
    encode_tensor,
    load_checkpoint,
    load_tensor,
    save_checkpoint,
    save_tensor,
)

__all__ = [
    "read_pgm",
    "write_pgm",
    "read_levels",
    "quantize",
    "encode_tensor",
    "decode_tensor",
    "save_tensor",
    "load_tensor",
    "save_checkpoint",
    "load_checkpoint",
    "parse_run_config",
    "serialize_run_config",
    "load_run_config",
    "save_run_config",
    "gen_dataset",
    "synthetic_image",
    "load_images",
    "corrupt_dataset",
    "load_noisy",
    "emit_csv",
]
