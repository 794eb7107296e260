"""
Gerador de fluxos sintéticos

Produz datasets determinísticos com a estrutura benigno/ataque SYN e o
desbalanceamento de classes do CIC-DDoS2019, para rodar o pipeline completo
em escala de bancada sem os 80 milhões de fluxos originais.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import List

import numpy as np

try:
    from .errors import ConfigError
    from .flowdata import Dataset, write_dataset_csv
except ImportError:
    from errors import ConfigError
    from flowdata import Dataset, write_dataset_csv


logger = logging.getLogger(__name__)

# Atributos de fluxo do CICFlowMeter, na ordem do CIC-DDoS2019 após remover
# os identificadores
CIC_FEATURE_NAMES = [
    "Source Port", "Destination Port", "Protocol", "Flow Duration",
    "Total Fwd Packets", "Total Backward Packets",
    "Total Length of Fwd Packets", "Total Length of Bwd Packets",
    "Fwd Packet Length Max", "Fwd Packet Length Min",
    "Fwd Packet Length Mean", "Fwd Packet Length Std",
    "Bwd Packet Length Max", "Bwd Packet Length Min",
    "Bwd Packet Length Mean", "Bwd Packet Length Std",
    "Flow Bytes/s", "Flow Packets/s", "Flow IAT Mean", "Flow IAT Std",
    "Flow IAT Max", "Flow IAT Min", "Fwd IAT Total", "Fwd IAT Mean",
    "Fwd IAT Std", "Fwd IAT Max", "Fwd IAT Min", "Bwd IAT Total",
    "Bwd IAT Mean", "Bwd IAT Std", "Bwd IAT Max", "Bwd IAT Min",
    "Fwd PSH Flags", "Bwd PSH Flags", "Fwd URG Flags", "Bwd URG Flags",
    "Fwd Header Length", "Bwd Header Length", "Fwd Packets/s",
    "Bwd Packets/s", "Min Packet Length", "Max Packet Length",
    "Packet Length Mean", "Packet Length Std", "Packet Length Variance",
    "FIN Flag Count", "SYN Flag Count", "RST Flag Count", "PSH Flag Count",
    "ACK Flag Count", "URG Flag Count", "CWE Flag Count", "ECE Flag Count",
    "Down/Up Ratio", "Average Packet Size", "Avg Fwd Segment Size",
    "Avg Bwd Segment Size", "Fwd Header Length.1", "Fwd Avg Bytes/Bulk",
    "Fwd Avg Packets/Bulk", "Fwd Avg Bulk Rate", "Bwd Avg Bytes/Bulk",
    "Bwd Avg Packets/Bulk", "Bwd Avg Bulk Rate", "Subflow Fwd Packets",
    "Subflow Fwd Bytes", "Subflow Bwd Packets", "Subflow Bwd Bytes",
    "Init_Win_bytes_forward", "Init_Win_bytes_backward",
    "act_data_pkt_fwd", "min_seg_size_forward", "Active Mean",
    "Active Std", "Active Max", "Active Min", "Idle Mean", "Idle Std",
    "Idle Max", "Idle Min", "Inbound",
]


def feature_names(n_features: int) -> List[str]:
    named = CIC_FEATURE_NAMES[:n_features]
    return named + [f"feature_{j}" for j in range(len(named), n_features)]


@dataclass
class SynthConfig:
    """Parâmetros do gerador sintético."""
    n_rows: int = 1000
    attack_fraction: float = 0.5
    n_features: int = 82
    class_separation: float = 4.0
    noise_std: float = 1.0
    seed: int = 42

    def attack_rows(self) -> int:
        return int(np.floor(self.n_rows * self.attack_fraction + 0.5))

    def validate(self):
        if self.n_rows < 2:
            raise ConfigError(f"n_rows deve ser >= 2, recebido {self.n_rows}")
        if not 0.0 < self.attack_fraction < 1.0:
            raise ConfigError(
                f"attack_fraction deve estar em (0, 1), recebido {self.attack_fraction}"
            )
        if self.n_features < 1:
            raise ConfigError(f"n_features deve ser >= 1, recebido {self.n_features}")
        if self.class_separation < 0:
            raise ConfigError("class_separation deve ser >= 0")
        if self.noise_std <= 0:
            raise ConfigError("noise_std deve ser > 0")
        n_attack = self.attack_rows()
        if n_attack < 1 or n_attack > self.n_rows - 1:
            raise ConfigError(
                f"Cota degenerada: {n_attack} linhas de ataque em {self.n_rows}"
            )


def generate(cfg: SynthConfig) -> Dataset:
    """
    Gera linhas gaussianas; as de ataque são deslocadas por
    class_separation x direção[j], com direção em {-1, +1} por atributo.
    """
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)

    base_means = rng.uniform(-1.0, 1.0, size=cfg.n_features)
    direction = rng.choice(np.array([-1.0, 1.0]), size=cfg.n_features)

    n_attack = cfg.attack_rows()
    y = np.zeros(cfg.n_rows, dtype=np.int64)
    y[:n_attack] = 1

    X = base_means + cfg.noise_std * rng.standard_normal((cfg.n_rows, cfg.n_features))
    X[:n_attack] += cfg.class_separation * direction

    order = rng.permutation(cfg.n_rows)
    logger.debug(
        f"Sintético: {cfg.n_rows} linhas ({n_attack} ataque), "
        f"{cfg.n_features} atributos, separação {cfg.class_separation}"
    )
    return Dataset(X[order], y[order], feature_names(cfg.n_features))


def write_csv(cfg: SynthConfig, path: str) -> Dataset:
    """Gera e grava no dialeto lido por flowdata.load_csv."""
    dataset = generate(cfg)
    write_dataset_csv(dataset, Path(path))
    return dataset
