import math


def validate_widths(value: list):
    """
    Validate a list of hidden layer widths.

    Args:
        value (list): Neurons per hidden layer, input to output order.

    Returns:
        list: The validated widths.

    Raises:
        ValueError: If the list is empty, has more than 3 layers or contains a non-positive width.
    """
    if len(value) == 0:
        raise ValueError('At least one hidden layer is required')
    elif len(value) > 3:
        raise ValueError('At most 3 hidden layers are supported')
    elif any(width <= 0 for width in value):
        raise ValueError('Layer widths should be positive integers')
    return value


def validate_population(value):
    """
    Validate a GA population count.

    Args:
        value (int | str): A positive integer or the literal 'AUTO' (any case).

    Returns:
        int | str: The positive integer, or 'AUTO'.

    Raises:
        ValueError: If the value is neither a positive integer nor 'AUTO'.
    """
    if isinstance(value, str):
        if value.strip().upper() != 'AUTO':
            raise ValueError("Population should be a positive integer or 'AUTO'")
        return 'AUTO'
    if value <= 0:
        raise ValueError('Population should be a positive integer')
    return value


def validate_probability(value: float):
    if not 0.0 <= value <= 1.0:
        raise ValueError('Value should be a probability in [0, 1]')
    return value


def validate_non_negative(value: float):
    if not math.isfinite(value) or value < 0:
        raise ValueError('Value should be a finite non-negative number')
    return value
