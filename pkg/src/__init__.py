"""
Detector SYN - Random Forest ajustado para ataques SYN DoS

Módulos principais:
- detector_syn: Interface de linha de comando
- SynDetectionPipeline: Pipeline completo (preparação, ajuste, treino, predição)
- forest: Random Forest implementado do zero
"""


__version__ = "1.0.0"
