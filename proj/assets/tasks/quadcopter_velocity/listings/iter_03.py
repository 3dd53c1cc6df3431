def reward_function(copter_pos, copter_rot, target_vel, copter_angvels, actions, copter_linvels):
    # Constants
    Z_TARGET = 1.0
    VELOCITY_WEIGHT = 1.5
    HEIGHT_WEIGHT = 1.0
    ANGVEL_WEIGHT = 0.1

    # Calculate the difference between the target velocity and the copter's current velocity
    vel_diff = np.linalg.norm(target_vel - copter_linvels)

    # Calculate the difference between the target height and the copter's current height
    height_diff = np.abs(Z_TARGET - copter_pos[2])

    # Calculate the magnitude of the angular velocity
    angvel_magnitude = np.linalg.norm(copter_angvels)

    # Calculate the reward for the velocity, height and angular velocity
    vel_reward = np.exp(-VELOCITY_WEIGHT * vel_diff)
    height_reward = np.exp(-HEIGHT_WEIGHT * height_diff)
    angvel_reward = np.exp(-ANGVEL_WEIGHT * angvel_magnitude)

    # Combine the rewards
    reward = vel_reward + height_reward + angvel_reward
    return reward
