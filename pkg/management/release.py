#!/usr/bin/env python
# Release helper, run from the repository root:
#   python management/release.py          # build and check packaged files
#   python management/release.py test     # fast tests, build, upload to test.pypi.org
#   python management/release.py release  # full tests, build, upload to PyPI, bump version
#   python management/release.py clean
import sys, os, shutil, os.path as path, fnmatch, subprocess

package = 'collapsed_lpcm'
version_file = f"{package}/__version__"


def clean():
    for folder in ['dist', 'build', f'{package}.egg-info', '.pytest_cache']:
        if path.exists(folder):
            shutil.rmtree(folder)


def run_tests(slow=False):
    marker = [] if slow else ['-m', 'not slow']
    subprocess.run([sys.executable, '-m', 'pytest', '-q'] + marker, check=True)


def build():
    clean()
    subprocess.run([sys.executable, 'setup.py', 'sdist', 'bdist_wheel'], check=True)


def packaged_missing(src_dir, dst_dir, ignore=('__pycache__', '*.pyc', '.DS_Store')):
    '''Files under src_dir that did not make it into the build.'''
    missing = []
    for curr, dirs, files in os.walk(src_dir):
        rel = path.relpath(curr, src_dir)
        if any(fnmatch.fnmatch(path.basename(rel), p) for p in ignore):
            continue
        for fname in files:
            if any(fnmatch.fnmatch(fname, p) for p in ignore):
                continue
            if not path.exists(path.join(dst_dir, rel, fname)):
                missing.append(path.join(path.basename(src_dir), rel, fname))
    return missing


def bump_version():
    with open(version_file) as f:
        version = f.readline().strip().split('.')
    version[-1] = str(int(version[-1])+1)
    with open(version_file, 'w') as f:
        f.write(f"{'.'.join(version)}\n")
    return '.'.join(version)


if __name__ == '__main__':
    mode = sys.argv[1] if len(sys.argv) > 1 else ''

    if mode == 'release':
        run_tests(slow=True)
        build()
        print(f">> Uploading to PyPI ...")
        subprocess.run('twine upload dist/*', shell=True, check=True)
        print(f">> Next version: {bump_version()}")
        clean()
    elif mode == 'test':
        run_tests()
        build()
        print(f">> Uploading to test.pypi.org ...")
        subprocess.run('python -m twine upload --repository-url https://test.pypi.org/legacy/ dist/*', shell=True)
        clean()
    elif mode == 'clean':
        clean()
    else:
        build()
        missing = packaged_missing(package, f'build/lib/{package}')
        if missing:
            print(f"** The following files are not properly packaged:")
            for fname in missing:
                print(f"\t{fname}")
        else:
            print(f">> Build finished.")
