import numpy as np
import pytest

from nocollide.measures import Frame, ShapeSpec, write_idx


@pytest.fixture(scope="session")
def mnist_files(tmp_path_factory):
    """IDX files built from the 5000-digit MNIST subset bundled with mlxtend.

    The subset is sorted by label, so it is shuffled with a fixed seed to
    look like the interleaved training file.
    """
    data = pytest.importorskip("mlxtend.data")
    X, y = data.mnist_data()
    order = np.random.default_rng(12345).permutation(len(y))
    images = X[order].reshape(-1, 28, 28).astype(np.uint8)
    labels = y[order].astype(np.uint8)
    root = tmp_path_factory.mktemp("mnist")
    img_path = root / "train-images-idx3-ubyte.gz"
    lab_path = root / "train-labels-idx1-ubyte.gz"
    write_idx(img_path, images)
    write_idx(lab_path, labels)
    return img_path, lab_path


@pytest.fixture(scope="session")
def unit_disk_128():
    frame = Frame(128, 128, (-2.0, -2.0), 4.0 / 128)
    return frame.rasterize(ShapeSpec.disk((0.0, 0.0), 1.0))


def random_density(rng, h=None, w=None, sparsity=0.3):
    """Random grid density with a guaranteed spread-out positive support."""
    h = h or int(rng.integers(8, 20))
    w = w or int(rng.integers(8, 20))
    m = rng.random((h, w))
    m[rng.random((h, w)) < sparsity] = 0.0
    m[h // 2, :] += 0.1
    m[:, w // 2] += 0.1
    return m
