def reward_function(hole_pos, ball_pos, finger_pos, ball_init_pos, actions):

    ball_hole_XY_dist = torch.norm(hole_pos[:,0:2] - ball_pos[:,0:2], p=2, dim=-1)
    
    dist_reward = 1-torch.tanh(3*ball_hole_XY_dist)      # regulize the dist_reward in [0,1]
    
    ball_to_init_dist = torch.norm(ball_pos[:,0:2] - ball_init_pos[:,0:2], p=2, dim=-1)
    self.ball_to_init_dist = ball_to_init_dist
    
    finger_ball_dist = torch.norm(finger_pos - ball_pos, p=2, dim=-1)
    finger_ball_reward = 1.0/(1.0+finger_ball_dist**2)
    
    
    # 1st penalty: regularization on the actions (summed for each environment)
    action_penalty = torch.sum(self.actions ** 2, dim=-1)
    action_penalty = 1-torch.tanh(action_penalty/2.5)
    
    # 5th penalty if ball is not moved
    ball_unmove_penalty = torch.zeros_like(dist_reward)
    ball_unmove_penalty = torch.where(ball_to_init_dist<0.3, torch.tanh(15*(0.3-ball_to_init_dist)), ball_unmove_penalty)
    
    falling_bonus = torch.where(torch.logical_and(ball_hole_XY_dist < 0.1 , ball_pos[:,2]<0.38), torch.ones_like(dist_reward), torch.zeros_like(dist_reward))
    
    falling_penalty = torch.zeros_like(dist_reward)
    falling_penalty = torch.where(torch.logical_and(ball_hole_XY_dist > 0.001 , ball_pos[:,2]<0.38), falling_penalty+10, falling_penalty)
    
    dist_reward = torch.where(ball_pos[:,0]<hole_pos[:,0], torch.zeros_like(dist_reward), dist_reward)
    
    dist_penalty = torch.tanh(3*ball_hole_XY_dist) 
    
    final_reward = 10.0*dist_reward - 1.0*ball_unmove_penalty + 100.0*falling_bonus - 0.1*action_penalty \
                  - 1.0*falling_penalty + 1.0*finger_ball_reward - 0.1*dist_penalty
    return final_reward
