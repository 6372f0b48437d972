"""
Output Directory Setup
Creates the result layout a sweep writes into
"""

import os
import sys

sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from model.errors import ConfigError

SUBDIRECTORIES = ['allocations', 'collections']


def setup_directories(output_dir):
    """Create the output directory and its sub-directories"""
    for path in [output_dir] + [os.path.join(output_dir, name) for name in SUBDIRECTORIES]:
        try:
            if os.path.isdir(path):
                print(f"✓ Using directory: {path}")
            else:
                os.makedirs(path)
                print(f"✓ Created directory: {path}")
        except OSError as e:
            print(f"✗ Failed to create directory {path}: {e}")
            raise ConfigError(f"cannot create output directory {path}: {e}")


def verify_writable(output_dir):
    marker = os.path.join(output_dir, '.write-check')
    try:
        with open(marker, 'w') as handle:
            handle.write('ok')
        os.remove(marker)
        print(f"✓ Output directory writable: {output_dir}")
    except OSError as e:
        print(f"✗ Output directory not writable: {e}")
        raise ConfigError(f"output directory is not writable: {output_dir}")


def provision_output_dir(output_dir):
    """Create an output directory and check it is writable; returns its absolute path"""
    output_dir = os.path.abspath(output_dir)
    setup_directories(output_dir)
    verify_writable(output_dir)
    return output_dir


if __name__ == '__main__':
    from infrastructure.config import default_output_dir

    target = sys.argv[1] if len(sys.argv) > 1 else default_output_dir()
    print("="*60)
    print("AD ALLOCATION - OUTPUT SETUP")
    print("="*60)
    print(f"\nOutput directory: {target}\n")
    provision_output_dir(target)
    print("\n" + "="*60)
    print("SETUP COMPLETE")
    print("="*60)
