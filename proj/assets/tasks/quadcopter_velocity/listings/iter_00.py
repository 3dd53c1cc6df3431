def reward_function(copter_pos, copter_rot, target_vel, copter_angvels, actions, copter_linvels):
    # Constants
    Z_TARGET = 1.0
    VELOCITY_WEIGHT = 1.0
    HEIGHT_WEIGHT = 0.5

    # Calculate the difference between the target velocity and the copter's current velocity
    vel_diff = np.linalg.norm(target_vel - copter_linvels)

    # Calculate the difference between the target height and the copter's current height
    height_diff = np.abs(Z_TARGET - copter_pos[2])

    # Calculate the reward for the velocity and height
    vel_reward = np.exp(-VELOCITY_WEIGHT * vel_diff)
    height_reward = np.exp(-HEIGHT_WEIGHT * height_diff)

    # Combine the rewards
    reward = vel_reward + height_reward

    return reward
