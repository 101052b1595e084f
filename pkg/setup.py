#!/usr/bin/env python3
"""
Setup script for the glu triangulated 3-manifold toolkit
"""

import shutil
import subprocess
import sys
from pathlib import Path


def check_python_version():
    """Check if Python version is compatible."""
    if sys.version_info < (3, 8):
        print("❌ Python 3.8 or higher is required")
        sys.exit(1)
    print(f"✅ Python {sys.version_info.major}.{sys.version_info.minor} detected")


def install_dependencies():
    """Install required dependencies."""
    print("📦 Installing dependencies...")
    try:
        subprocess.check_call([sys.executable, "-m", "pip", "install", "-r", "requirements.txt"])
        print("✅ Dependencies installed successfully")
    except subprocess.CalledProcessError as e:
        print(f"❌ Failed to install dependencies: {e}")
        sys.exit(1)


def create_directories():
    """Create the output directories used by FileManager."""
    print("📁 Creating directories...")
    for directory in ["runs/reports", "runs/structures", "runs/sequences"]:
        Path(directory).mkdir(parents=True, exist_ok=True)
    print("✅ Directories created successfully")


def setup_environment():
    """Create .env from env_example.txt if it is missing."""
    print("🔧 Setting up environment...")
    env_file = Path(".env")
    if env_file.exists():
        print("✅ .env file already exists")
        return
    shutil.copy("env_example.txt", env_file)
    print("✅ .env file created from env_example.txt")


def run_tests():
    """Check imports and run the census smoke test."""
    print("🧪 Running basic tests...")
    try:
        import jinja2  # noqa: F401
        import networkx  # noqa: F401
        import numpy  # noqa: F401
        import scipy  # noqa: F401
        import sympy  # noqa: F401
        import yaml  # noqa: F401
        print("✅ All imports successful")
    except ImportError as e:
        print(f"❌ Import test failed: {e}")
        return False

    try:
        subprocess.check_call([sys.executable, "app.py", "census", "double", "--report", "runs/double.json"])
        subprocess.check_call([sys.executable, "app.py", "validate", "runs/double.json", "--report",
                               "runs/reports/double.validate.json"])
        print("✅ glu validate runs")
    except subprocess.CalledProcessError as e:
        print(f"❌ Smoke test failed: {e}")
        return False
    return True


def main():
    """Main setup function."""
    print("🚀 Setting up glu")
    print("=" * 50)

    check_python_version()
    install_dependencies()
    create_directories()
    setup_environment()

    if run_tests():
        print("\n🎉 Setup completed successfully!")
        print("\nNext steps:")
        print("1. Adjust budgets and seeds in .env")
        print("2. Run: python app.py census lens 5 2 --report runs/l52.json")
        print("3. Run: python app.py pi1 runs/l52.json --markdown")
    else:
        print("\n⚠️  Setup completed with warnings")
        print("Please check the error messages above")


if __name__ == "__main__":
    if len(sys.argv) > 1:
        # Invoked by a build backend (pip install): metadata lives in pyproject.toml.
        from setuptools import setup
        setup()
    else:
        main()
