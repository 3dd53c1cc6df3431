def reward_function(ball_pos, ball_vel, tray_pos, tray_rot):
    # Constants
    DISTANCE_WEIGHT = 1.0
    VELOCITY_WEIGHT = 1.0
    ROTATION_WEIGHT = 1.0

    # Calculate the distance between the ball and the tray
    distance = np.linalg.norm(ball_pos - tray_pos)

    # Calculate the velocity of the ball
    velocity = np.linalg.norm(ball_vel)

    # Calculate the rotation of the tray
    rotation = np.linalg.norm(tray_rot)

    # Reward for catching the ball
    catch_reward = DISTANCE_WEIGHT * (1.0 / (1.0 + distance))

    # Reward for low velocity
    velocity_reward = VELOCITY_WEIGHT * (1.0 / (1.0 + velocity))

    # Reward for stable tray
    rotation_reward = ROTATION_WEIGHT * (1.0 / (1.0 + rotation))

    # Total reward
    total_reward = catch_reward + velocity_reward + rotation_reward

    return total_reward
