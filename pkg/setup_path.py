"""
Script auxiliar para adicionar o projeto ao path Python
Útil para executar scripts e testes sem instalação: a raiz permite
`import src.<módulo>` e src/ permite importar os módulos diretamente.
"""
import sys
from pathlib import Path


project_root = Path(__file__).parent
src_path = project_root / "src"
if str(project_root) not in sys.path:
    sys.path.insert(0, str(project_root))
if str(src_path) not in sys.path:
    sys.path.append(str(src_path))
