#!/usr/bin/env python3
"""
Test runner for linkfit.
Runs the fast suite, then the slow reproduction gates, and prints a summary.
"""

import sys
import subprocess
from pathlib import Path

ROOT = Path(__file__).parent.parent


def run_suite(title: str, marker: str) -> bool:
    """Run pytest with a marker expression from the repository root."""
    print(f"🧪 Running {title}...")
    print("=" * 50)

    try:
        result = subprocess.run(
            [sys.executable, "-m", "pytest", "tests", "-m", marker, "-q"],
            cwd=ROOT,
            capture_output=True,
            text=True,
        )

        print(result.stdout)
        if result.stderr:
            print("STDERR:", result.stderr)

        return result.returncode == 0
    except Exception as e:
        print(f"❌ Error running pytest: {e}")
        return False


def main():
    """Main test runner."""
    print("🚀 linkfit Test Runner")
    print("=" * 50)

    fast_success = run_suite("Fast Tests", "not slow")
    if "--fast" in sys.argv:
        slow_success = None
    else:
        slow_success = run_suite("Reproduction Gates", "slow")

    # Summary
    print("\n" + "=" * 50)
    print("📊 Test Summary:")
    print(f"   Fast Tests: {'✅ PASS' if fast_success else '❌ FAIL'}")
    if slow_success is None:
        print("   Reproduction Gates: ⚠️  SKIP (--fast)")
    else:
        print(f"   Reproduction Gates: {'✅ PASS' if slow_success else '❌ FAIL'}")

    if fast_success and slow_success is not False:
        print("\n🎉 All selected tests passed!")
        return True
    print("\n❌ Some tests failed. Check the output above for details.")
    return False


if __name__ == "__main__":
    success = main()
    sys.exit(0 if success else 1)
