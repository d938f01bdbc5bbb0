import os
import tomlkit
from setuptools import setup, find_packages


CURRENT_DIR = os.path.dirname(os.path.abspath(__file__))


def read_dependencies():
    pyproject_path = os.path.join(CURRENT_DIR, 'pyproject.toml')

    with open(pyproject_path, "r") as file:
        data = tomlkit.parse(file.read())
        dependencies = data["tool"]["poetry"]["dependencies"]

    # poetry carets become plain lower bounds for setuptools
    return [
        f"{name}>={str(spec).lstrip('^')}"
        for name, spec in dependencies.items()
        if name != "python"
    ]


metadata = {
    'name': "v2x_mediator",
    'version': "10.19.2026",
    'description': "Deterministic simulator for a robot mediating pedestrian crossings over V2X.",
    'authors': ["unaidedelf8777"],
    'author_email': "thwackyy.y@gmail.com",
    'license': "Apache 2.0",
    'classifiers': [
        "Programming Language :: Python :: Implementation :: CPython",
        "Programming Language :: Python :: Implementation :: PyPy",
        "Topic :: Scientific/Engineering",
    ],
}

setup(
    name=metadata['name'],
    version=metadata['version'],
    author=metadata['authors'][0].split(" <")[0],
    author_email=metadata['author_email'],
    description=metadata['description'],
    long_description=open("README.md").read(),
    long_description_content_type="text/markdown",
    classifiers=metadata['classifiers'],
    license=metadata['license'],
    packages=find_packages(exclude=["tests", "bench"]),
    package_data={"v2x_mediator": ["scenarios/*.toml"]},
    include_package_data=True,
    zip_safe=False,
    python_requires='>=3.9',
    install_requires=read_dependencies(),
    setup_requires=["setuptools>=69.5.1", "wheel", "tomlkit>=0.12.5"],
    entry_points={
        "console_scripts": ["v2x-mediator=v2x_mediator.harness.cli:main"],
    },
)
